//! Uniform access to the four construction variants.

use dioph::angles::g_index;
use dioph::constructions::{
    build_first_angle, build_last_angle, build_line, build_sum, Descriptor, FirstAngleConstruction, LastAngleConstruction, LineConstruction, Mode,
    SumConstruction,
};
use dioph::estimation::Candidate;
use dioph::lattice::RationalSubspace;
use dioph::series::BetaSchedule;
use dioph::target::SeriesTarget;
use num_rational::BigRational;

use crate::config::{ConstructionConfig, MeasureConfig};
use crate::CliError;

pub enum Built {
    Line(LineConstruction),
    First(FirstAngleConstruction),
    Sum(SumConstruction),
    Last(LastAngleConstruction),
}

fn rats(v: &[crate::config::Rat]) -> Vec<BigRational> {
    v.iter().map(|r| r.0.clone()).collect()
}

pub fn build(c: &ConstructionConfig, seed: u64, mode: Mode) -> Result<Built, CliError> {
    Ok(match c {
        ConstructionConfig::Ch5 { n, theta, betas } => Built::Line(build_line(*n, *theta, BetaSchedule::new(rats(betas))?, seed, mode)?),
        ConstructionConfig::Ch6 { n, d, theta, betas, level_betas } => {
            Built::First(build_first_angle(*n, *d, *theta, rats(betas), level_betas.as_deref().map(rats), seed, mode)?)
        }
        ConstructionConfig::Ch7 { d, m, theta, betas, c2 } => {
            Built::Sum(build_sum(*d, *m, *theta, betas.iter().map(|r| rats(r)).collect(), seed, mode, *c2)?)
        }
        ConstructionConfig::Ch8 { d, q, theta, alpha } => Built::Last(build_last_angle(*d, *q, *theta, alpha.0.clone(), seed, mode)?),
    })
}

impl Built {
    pub fn descriptor(&self) -> Descriptor {
        match self {
            Built::Line(c) => c.descriptor(),
            Built::First(c) => c.descriptor(),
            Built::Sum(c) => c.descriptor(),
            Built::Last(c) => c.descriptor(),
        }
    }

    pub fn flags(&self) -> String {
        match self {
            Built::Line(c) => c.hyp.flags(),
            Built::First(c) => c.hyp.flags(),
            Built::Sum(c) => c.hyp.flags(),
            Built::Last(c) => c.hyp.flags(),
        }
    }

    pub fn theta(&self) -> u64 {
        self.target().theta
    }

    pub fn target(&self) -> &SeriesTarget {
        match self {
            Built::Line(c) => &c.target,
            Built::First(c) => &c.target,
            Built::Sum(c) => &c.target,
            Built::Last(c) => &c.target,
        }
    }

    /// The target the family of dimension e is measured against.
    pub fn measured_target(&self, m: &MeasureConfig) -> SeriesTarget {
        match self {
            Built::Sum(c) => c.sub_target(m.blocks.as_deref().unwrap_or(&[])),
            _ => self.target().clone(),
        }
    }

    /// Last angle for the measured target, except the first angle for ch6.
    pub fn default_j(&self, e: usize, m: &MeasureConfig) -> usize {
        let n = self.target().n;
        let d = match self {
            Built::First(_) => return 1,
            Built::Sum(_) => m.blocks.as_ref().map_or(1, |b| b.len()),
            _ => self.target().d(),
        };
        d.min(e) - g_index(d, e, n)
    }

    /// Exact prediction for ψ_j along the family, when the theory supplies one.
    pub fn predicted(&self, e: usize, j: usize, m: &MeasureConfig) -> Option<BigRational> {
        match self {
            Built::Line(c) => (j == 1).then(|| c.predicted(e)),
            Built::First(c) => if j == 1 { c.predicted(e).ok() } else { None },
            Built::Last(c) => (j == self.default_j(e, m)).then(|| c.predicted(e).ok()).flatten(),
            Built::Sum(c) => {
                let blocks = m.blocks.as_deref()?;
                (j == self.default_j(e, m) && g_index(blocks.len(), e, c.n) == 0).then(|| c.predicted_subset_exponent(blocks, e).ok()).flatten()
            }
        }
    }

    /// Labeled members of the approximating family of dimension e over the configured range.
    pub fn family(&self, e: usize, m: &MeasureConfig) -> Result<Vec<Candidate>, CliError> {
        let lo = m.n_min.unwrap_or(1);
        let hi = m.n_max.unwrap_or(lo);
        let one = |f: &dyn Fn(usize) -> dioph::Result<RationalSubspace>| -> Result<Vec<Candidate>, CliError> {
            (lo..=hi).map(|nn| Ok(Candidate::new(format!("e{e}_N{nn}"), f(nn)?))).collect()
        };
        match self {
            Built::Line(c) => one(&|nn| c.bne(nn, e)),
            Built::First(c) => one(&|nn| c.bne(nn, e)),
            Built::Last(c) => one(&|nn| c.family(nn, e)),
            Built::Sum(c) => {
                let blocks = m.blocks.as_deref().unwrap_or(&[]);
                let sched = c.diagonal_schedule(blocks, e, m.max_bits.unwrap_or(2.0e5))?;
                sched
                    .iter()
                    .map(|ns| {
                        let label = format!("e{e}_N{}", ns.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("-"));
                        Ok(Candidate::new(label, c.cjn(blocks, ns, e)?))
                    })
                    .collect()
            }
        }
    }

    /// The constructed lines B_{N,1} for N ≤ depth, used to tag enumerated records.
    pub fn lines(&self, depth: usize) -> Vec<(usize, RationalSubspace)> {
        (0..=depth)
            .filter_map(|nn| {
                let b = match self {
                    Built::Line(c) => c.bne(nn, 1),
                    Built::First(c) => c.bne(nn, 1),
                    Built::Last(c) => c.family(nn, 1),
                    Built::Sum(_) => return None,
                };
                b.ok().map(|b| (nn, b))
            })
            .collect()
    }
}
