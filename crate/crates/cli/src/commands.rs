//! The five subcommands. Every JSON artifact embeds the resolved config and is written
//! single-threaded with stable field order.

use std::fs;
use std::path::Path;

use dioph::angles::PrecisionContext;
use dioph::constructions::{deep_depth, Descriptor};
use dioph::estimation::{
    duality_pair, enumerate_subspaces, exponent_estimate, family_sequence, planar_records, records, Candidate, EnumerationConfig, FixedTarget, RecordJson,
    RecordSequence, CSV_HEADER,
};
use dioph::lattice::{IntegerVector, RationalSubspace, SubspaceJson};
use dioph::series::format_rational;
use dioph::target::SeriesTarget;
use dioph::Real;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::build::{build, Built};
use crate::config::{parse_sqrt_target, RunConfig};
use crate::verify::{run_suite, Check};
use crate::CliError;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn flags_with_bits(flags: &str, bits: u32) -> String {
    format!("{flags};bits={bits}")
}

fn log_theta_height(h2: &BigInt, theta: u64) -> f64 {
    dioph::arith::log2_ratio(h2, &BigInt::one()) / 2.0 / (theta as f64).log2()
}

#[derive(Serialize)]
struct DescriptorFile<'a> {
    config: &'a RunConfig,
    mode_flags: String,
    descriptor: Descriptor,
}

#[derive(Serialize)]
struct FamilyFile<'a> {
    config: &'a RunConfig,
    label: &'a str,
    e: usize,
    mode_flags: &'a str,
    height_sq: String,
    log_theta_height: String,
    subspace: SubspaceJson,
}

fn built_from(cfg: &RunConfig) -> Result<Built, CliError> {
    build(cfg.construction()?, cfg.seed(), cfg.mode())
}

pub fn construct(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let built = built_from(cfg)?;
    let flags = built.flags();
    write_json(&out.join("descriptor.json"), &DescriptorFile { config: cfg, mode_flags: flags.clone(), descriptor: built.descriptor() })?;
    let dir = out.join("family");
    if dir.exists() {
        fs::remove_dir_all(&dir)?;
    }
    let variant = cfg.construction()?.variant();
    for &e in cfg.measure.e.as_deref().unwrap_or(&[]) {
        for c in built.family(e, &cfg.measure)? {
            let h2 = c.subspace.height_sq();
            let file = FamilyFile {
                config: cfg,
                label: &c.label,
                e,
                mode_flags: &flags,
                height_sq: h2.to_string(),
                log_theta_height: format!("{:.9}", log_theta_height(h2, built.theta())),
                subspace: c.subspace.to_json(),
            };
            write_json(&dir.join(format!("{variant}_{}.json", c.label)), &file)?;
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityRow {
    pub label: String,
    pub depth: usize,
    pub psi_truncated: String,
    pub psi_dual: String,
    pub relative_gap: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceJson {
    pub target: String,
    pub e: usize,
    pub j: usize,
    pub source: String,
    pub mode_flags: String,
    pub precision_bits: u32,
    pub predicted: Option<String>,
    pub predicted_decimal: Option<String>,
    pub estimate: Option<String>,
    pub window: Option<usize>,
    pub records: Vec<RecordJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duality: Option<Vec<DualityRow>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumeration: Option<EnumerationInfo>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationInfo {
    pub mode: String,
    pub complete: bool,
    pub height_bound: u64,
    pub record_count: usize,
    /// Records equal to a constructed B_{N,1}, as (record label, N).
    pub constructed_matches: Vec<(String, usize)>,
    pub truncation_depth: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordsFile {
    pub config: RunConfig,
    pub descriptor: Option<Descriptor>,
    pub sequences: Vec<SequenceJson>,
}

fn sequence_json(seq: &RecordSequence, bits: u32, predicted: Option<BigRational>, window: Option<usize>) -> SequenceJson {
    let est = exponent_estimate(seq, window).ok();
    SequenceJson {
        target: seq.target.clone(),
        e: seq.e,
        j: seq.j,
        source: seq.source.as_str().into(),
        mode_flags: seq.mode_flags.clone(),
        precision_bits: bits,
        predicted_decimal: predicted.as_ref().map(|p| format!("{:.12}", p.to_f64().unwrap_or(f64::NAN))),
        predicted: predicted.as_ref().map(format_rational),
        estimate: est.as_ref().map(|e| format!("{:.12}", e.estimate)),
        window: est.as_ref().map(|e| e.window),
        records: seq.to_json(),
        duality: None,
        enumeration: None,
    }
}

fn write_records(out: &Path, file: &RecordsFile, seqs: &[RecordSequence]) -> Result<(), CliError> {
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for s in seqs {
        for row in s.csv_rows() {
            csv.push_str(&row);
            csv.push('\n');
        }
    }
    write_text(&out.join("records.csv"), &csv)?;
    write_json(&out.join("records.json"), file)
}

/// Integer rows spanning the depth-M truncation of the target.
fn truncation_subspace(target: &SeriesTarget, depth: usize) -> Result<RationalSubspace, CliError> {
    let rows: Vec<IntegerVector> = target
        .truncation_rows(depth)
        .iter()
        .map(|r| {
            let l = r.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
            r.iter().map(|x| x.numer() * (&l / x.denom())).collect()
        })
        .collect();
    Ok(RationalSubspace::from_integer_rows(&rows)?)
}

fn duality_rows(target: &SeriesTarget, seq: &RecordSequence, depth: usize, bits: u32) -> Result<Vec<DualityRow>, CliError> {
    let a = truncation_subspace(target, depth)?;
    let la = dioph::arith::log2_abs(a.height_sq());
    seq.records
        .iter()
        .map(|r| {
            let need = (2.0 * la + dioph::arith::log2_abs(&r.height_sq)).ceil() as u32 + bits;
            let ctx = PrecisionContext::new(need);
            let (x, y) = duality_pair(&a, &r.subspace, seq.j, &ctx)?;
            let gap = (x.value.clone() - y.value.clone()).abs() / x.value.clone();
            Ok(DualityRow {
                label: r.label.clone(),
                depth,
                psi_truncated: x.value.to_sci_string(30),
                psi_dual: y.value.to_sci_string(30),
                relative_gap: gap.to_sci_string(4),
            })
        })
        .collect()
}

pub fn measure(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let built = built_from(cfg)?;
    let bits = cfg.precision_bits();
    let ctx = PrecisionContext::new(bits);
    let m = &cfg.measure;
    let flags = flags_with_bits(&built.flags(), bits);
    let variant = cfg.construction()?.variant();
    let target = built.measured_target(m);
    let mut seqs = Vec::new();
    let mut jsons = Vec::new();
    for &e in m.e.as_deref().unwrap_or(&[]) {
        let j = m.j.unwrap_or_else(|| built.default_j(e, m));
        let cands = built.family(e, m)?;
        if cands.is_empty() {
            return Err(CliError::Config(format!("measure: empty family for e = {e}")));
        }
        let seq = family_sequence(&target, cands, j, &ctx, variant, &flags)?;
        let mut sj = sequence_json(&seq, bits, built.predicted(e, j, m), m.window);
        if m.duality {
            let depth = deep_depth(m.n_max.unwrap_or(1), e);
            sj.duality = Some(duality_rows(&target, &seq, depth, bits)?);
        }
        jsons.push(sj);
        seqs.push(seq);
    }
    let file = RecordsFile { config: cfg.clone(), descriptor: Some(built.descriptor()), sequences: jsons };
    write_records(out, &file, &seqs)
}

/// Smallest depth whose next term lies below the working precision.
fn realization_depth(target: &SeriesTarget, ctx: &PrecisionContext) -> usize {
    let lt = (target.theta as f64).log2();
    let terms = target.columns.iter().map(|c| c.terms.len()).min().unwrap_or(1);
    (0..terms.saturating_sub(1))
        .find(|&k| target.columns.iter().all(|c| c.terms[k + 1].exponent as f64 * lt > ctx.working() as f64 + 64.0))
        .unwrap_or(terms.saturating_sub(1))
}

/// Constructed depths N whose family height stays within reach of the bound.
fn reachable_depth(target: &SeriesTarget, bound: u64) -> usize {
    let lt = (target.theta as f64).log2();
    let lb = (bound as f64).log2() + 2.0;
    let col = &target.columns[0];
    (0..col.terms.len()).take_while(|&k| col.terms[k].exponent as f64 * lt <= lb).last().unwrap_or(0) + 1
}

pub fn enumerate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let en = &cfg.enumerate;
    let bits = cfg.precision_bits();
    let ctx = PrecisionContext::new(bits);
    let (n, e, j) = (en.n.unwrap_or(2), en.e.unwrap_or(1), en.j.unwrap_or(1));
    let bound = en.bound.unwrap_or(1000);
    let bound_sq = bound.checked_mul(bound).ok_or_else(|| CliError::Config(format!("enumerate.bound: {bound} overflows H²")))?;
    let target_name = en.target.clone().unwrap_or_default();
    let ecfg = EnumerationConfig { n, e, height_sq_bound: bound_sq };
    let (seq, descriptor, depth, built) = if target_name == "construction" {
        let built = built_from(cfg)?;
        let flags = flags_with_bits(&built.flags(), bits);
        let target = built.target().clone();
        let (seq, depth) = if n == 2 && e == 1 {
            let depth = en.depth.unwrap_or_else(|| realization_depth(&target, &ctx));
            let fixed = FixedTarget { realization: target.realize(depth, &ctx)?, exact: None };
            (planar_records(&fixed, bound_sq, &ctx, &flags)?, Some(depth))
        } else {
            let cands: Vec<Candidate> = enumerate_subspaces(&ecfg)?.into_iter().map(|b| Candidate::new(pluecker_label(&b), b)).collect();
            (records(&target, cands, j, &ctx, "construction", &flags)?, None)
        };
        (seq, Some(built.descriptor()), depth, Some(built))
    } else {
        let s = parse_sqrt_target(&target_name)?;
        let flags = flags_with_bits("exact-target", bits);
        let fixed = FixedTarget::sqrt_line(s, &ctx)?;
        (planar_records(&fixed, bound_sq, &ctx, &flags)?, None, None, None)
    };
    let mut seq = seq;
    seq.target = target_name.clone();
    let mut matches = Vec::new();
    if let Some(b) = &built {
        if e == 1 {
            let lines = b.lines(reachable_depth(b.target(), bound));
            for r in &mut seq.records {
                if let Some((nn, _)) = lines.iter().find(|(_, l)| l.pluecker() == r.subspace.pluecker()) {
                    matches.push((r.label.clone(), *nn));
                }
            }
        }
    }
    let mut sj = sequence_json(&seq, bits, None, None);
    sj.enumeration = Some(EnumerationInfo {
        mode: serde_json::to_value(ecfg.mode()).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
        complete: ecfg.complete(),
        height_bound: bound,
        record_count: seq.records.len(),
        constructed_matches: matches,
        truncation_depth: depth,
    });
    let file = RecordsFile { config: cfg.clone(), descriptor, sequences: vec![sj] };
    write_records(out, &file, &[seq])
}

fn pluecker_label(b: &RationalSubspace) -> String {
    format!("[{}]", b.pluecker().coords.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
}

#[derive(Serialize)]
struct VerifyFile<'a> {
    config: &'a RunConfig,
    passed: bool,
    checks: Vec<Check>,
}

pub fn verify(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let cases = cfg.verify.cases.unwrap_or(100);
    let checks: Vec<Check> = cfg.verify.suites.as_deref().unwrap_or(&[]).iter().flat_map(|s| run_suite(s, cfg.seed(), cases, cfg.precision_bits())).collect();
    let passed = checks.iter().all(|c| c.passed);
    write_json(&out.join("verify.json"), &VerifyFile { config: cfg, passed, checks: checks.clone() })?;
    if passed {
        Ok(())
    } else {
        let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| format!("{}/{}", c.suite, c.name)).collect();
        Err(CliError::Verification(failed.join(", ")))
    }
}

pub const REPORT_HEADER: &str = "input,target,e,j,source,records,window,estimate,predicted,predicted_decimal,relative_error,mode_flags";

pub fn report(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let default = vec![out.join("records.json").to_string_lossy().into_owned()];
    let inputs = cfg.report.inputs.as_ref().unwrap_or(&default);
    let mut csv = String::from(REPORT_HEADER);
    csv.push('\n');
    for input in inputs {
        let text = fs::read_to_string(input).map_err(|e| CliError::Config(format!("report.inputs: {input}: {e}")))?;
        let file: RecordsFile = serde_json::from_str(&text).map_err(|e| CliError::Config(format!("report.inputs: {input}: {e}")))?;
        for s in &file.sequences {
            let est = s.estimate.as_deref().and_then(|x| x.parse::<f64>().ok());
            let pred = s.predicted_decimal.as_deref().and_then(|x| x.parse::<f64>().ok());
            let rel = match (est, pred) {
                (Some(a), Some(b)) if b != 0.0 => format!("{:.6}", (a - b) / b),
                _ => String::new(),
            };
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                input,
                s.target,
                s.e,
                s.j,
                s.source,
                s.records.len(),
                s.window.map(|w| w.to_string()).unwrap_or_default(),
                s.estimate.clone().unwrap_or_default(),
                s.predicted.clone().unwrap_or_default(),
                s.predicted_decimal.clone().unwrap_or_default(),
                rel,
                s.mode_flags
            ));
        }
    }
    write_text(&out.join("report.csv"), &csv)
}
