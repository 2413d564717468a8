//! Seeded randomized checks of the whole pipeline.
//!
//! Each trial draws a uniform labeled tree (Prüfer code) and a vertex. At an
//! NEB vertex a random valid spectrum is realized, verified, differentiated
//! and extended by one chord; otherwise random matrices with the tree's
//! pattern must fail the Duarte test. Reports contain no timings, so a fixed
//! seed reproduces them byte for byte.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::construct::{construct, verify_matrix, ConstructionReport, Tolerances};
use crate::continuation::{extend, HomotopyConfig};
use crate::eig::{check_interlacing, skew_eigenvalues, verify_duarte};
use crate::error::{Error, Result};
use crate::graph::{is_neb, matching_number, Tree};
use crate::jacobian::{is_nonsingular, jacobian_f, SINGULAR_TOLERANCE};
use crate::matrix::SkewMatrix;
use crate::poly::residues;
use crate::spectrum::SpectrumSpec;

pub const MAX_FUZZ_ORDER: usize = 12;
pub const MAX_EXHAUSTIVE_ORDER: usize = 8;

pub const CHECKS: &[&str] = &[
    "construction",
    "residue_positivity",
    "residue_palindromy",
    "h_root_interlacing",
    "spectrum_match",
    "ratio_identity",
    "duarte_constructed",
    "jacobian_nonsingular",
    "extension_spectrum",
    "cauchy_interlacing",
    "duarte_false_off_neb",
    "matching_number",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub extend_epsilon: f64,
    pub non_neb_samples: usize,
    pub tolerances: Tolerances,
    /// Relative tolerance for residue palindromy.
    pub palindromy_tolerance: f64,
    /// Non-strict Cauchy interlacing slack, relative to the spectral radius.
    pub cauchy_tolerance: f64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            n_max: 9,
            trials: 200,
            seed: 42,
            extend_epsilon: 0.05,
            non_neb_samples: 5,
            tolerances: Tolerances::default(),
            palindromy_tolerance: 1e-9,
            cauchy_tolerance: 1e-9,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckCount {
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub trial: usize,
    pub check: String,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Worst {
    pub lambda_deviation_rel: f64,
    pub mu_deviation_rel: f64,
    pub identity_residual: f64,
    pub palindromy_defect_rel: f64,
    pub min_residue_rel: Option<f64>,
    pub min_jacobian_pivot: Option<f64>,
    pub extension_deviation_rel: f64,
    pub cauchy_min_margin_rel: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExtensionStats {
    pub attempted: usize,
    pub succeeded: usize,
    /// Newton or homotopy failures; recorded, not counted as violations.
    pub failed: usize,
    pub skipped_no_chord: usize,
    pub failures: Vec<Violation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: usize,
    pub n: usize,
    /// 1-based.
    pub vertex: usize,
    pub edges: Vec<[usize; 2]>,
    pub neb: bool,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub config: FuzzConfig,
    pub trials: usize,
    pub neb_trials: usize,
    pub non_neb_trials: usize,
    pub checks: BTreeMap<String, CheckCount>,
    pub violations: Vec<Violation>,
    pub worst: Worst,
    pub extension: ExtensionStats,
    pub trial_log: Vec<TrialSummary>,
}

impl FuzzReport {
    pub fn violation_count(&self) -> usize {
        self.violations.len()
    }
}

struct Recorder<'a> {
    trial: usize,
    checks: &'a mut BTreeMap<String, CheckCount>,
    violations: &'a mut Vec<Violation>,
    ok: bool,
}

impl Recorder<'_> {
    fn check(&mut self, name: &str, pass: bool, detail: impl FnOnce() -> String) {
        let c = self.checks.entry(name.to_string()).or_default();
        if pass {
            c.passed += 1;
        } else {
            c.failed += 1;
            self.ok = false;
            self.violations.push(Violation {
                trial: self.trial,
                check: name.to_string(),
                detail: detail(),
            });
        }
    }
}

fn fmax(a: f64, b: f64) -> f64 {
    if b.is_nan() || a.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn opt_min(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |x| x.min(b)))
}

/// A uniformly random labeled tree on `n` vertices.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize) -> Tree {
    if n <= 2 {
        return Tree::path(n);
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
    Tree::from_prufer(n, &code).expect("valid Prüfer code")
}

/// A random valid spectrum of order `n`: `n - 1` positive values in
/// `[0.1, 100]` with gaps at least `0.01`, alternated between the two lists.
pub fn random_spectrum<R: Rng>(rng: &mut R, n: usize) -> SpectrumSpec {
    let k = n - 1;
    let positives = loop {
        let mut p: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..=100.0)).collect();
        p.sort_by(f64::total_cmp);
        if p.windows(2).all(|w| w[1] - w[0] >= 1e-2) {
            break p;
        }
    };
    // Above zero the merged order alternates; with n even it starts with a
    // lambda (zero is a mu), with n odd it starts with a mu.
    let lambda_first = n.is_multiple_of(2);
    let mut lp = Vec::new();
    let mut mp = Vec::new();
    for (i, x) in positives.into_iter().enumerate() {
        if (i % 2 == 0) == lambda_first {
            lp.push(x);
        } else {
            mp.push(x);
        }
    }
    SpectrumSpec::from_positive(&lp, &mp).expect("counts match the order")
}

/// A random matrix with graph `t`: weights of random sign and magnitude in
/// `[0.1, 2]`.
pub fn random_pattern_matrix<R: Rng>(rng: &mut R, t: &Tree) -> SkewMatrix {
    let weights: Vec<f64> = t
        .edges()
        .iter()
        .map(|_| {
            let w: f64 = rng.gen_range(0.1..=2.0);
            if rng.gen_bool(0.5) {
                w
            } else {
                -w
            }
        })
        .collect();
    SkewMatrix::from_edge_weights(t.n(), t.edges(), &weights)
}

/// A dense random skew matrix with entries uniform in `[-1, 1]`.
pub fn random_skew<R: Rng>(rng: &mut R, n: usize) -> SkewMatrix {
    let mut a = SkewMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            a.set(i, j, rng.gen_range(-1.0..=1.0));
        }
    }
    a
}

fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

pub fn fuzz(cfg: &FuzzConfig) -> Result<FuzzReport> {
    if !(2..=MAX_FUZZ_ORDER).contains(&cfg.n_max) {
        return Err(Error::SizeMismatch(format!(
            "n_max must lie in 2..={MAX_FUZZ_ORDER}, got {}",
            cfg.n_max
        )));
    }
    let mut report = FuzzReport {
        config: cfg.clone(),
        trials: cfg.trials,
        neb_trials: 0,
        non_neb_trials: 0,
        checks: CHECKS.iter().map(|c| (c.to_string(), CheckCount::default())).collect(),
        violations: Vec::new(),
        worst: Worst::default(),
        extension: ExtensionStats::default(),
        trial_log: Vec::with_capacity(cfg.trials),
    };
    for trial in 0..cfg.trials {
        let mut rng = trial_rng(cfg.seed, trial);
        let n = rng.gen_range(2..=cfg.n_max);
        let t = random_tree(&mut rng, n);
        let v = rng.gen_range(0..n);
        let summary = run_trial(trial, &t, v, &mut rng, cfg, &mut report)?;
        report.trial_log.push(summary);
    }
    Ok(report)
}

fn run_trial(
    trial: usize,
    t: &Tree,
    v: usize,
    rng: &mut ChaCha8Rng,
    cfg: &FuzzConfig,
    report: &mut FuzzReport,
) -> Result<TrialSummary> {
    let n = t.n();
    let neb = is_neb(t, v)?.verdict;
    let FuzzReport {
        checks,
        violations,
        worst,
        extension,
        ..
    } = report;
    let mut rec = Recorder {
        trial,
        checks,
        violations,
        ok: true,
    };

    let a = random_skew(rng, n);
    cauchy_checks(&a, cfg, &mut rec, worst)?;

    if neb {
        report.neb_trials += 1;
        let m = matching_number(t.graph());
        rec.check("matching_number", m == n / 2, || format!("matching number {m} for order {n}"));
        let spec = random_spectrum(rng, n);
        neb_pipeline(t, v, &spec, rng, cfg, &mut rec, worst, extension)?;
    } else {
        report.non_neb_trials += 1;
        for _ in 0..cfg.non_neb_samples {
            let a = random_pattern_matrix(rng, t);
            let d = verify_duarte(&a, t, v, cfg.tolerances.duarte)?;
            rec.check("duarte_false_off_neb", !d.holds, || {
                format!("random matrix passed the Duarte test at a non-NEB vertex: {:?}", a.rows())
            });
        }
    }
    Ok(TrialSummary {
        trial,
        n,
        vertex: v + 1,
        edges: t.edges().iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
        neb,
        passed: rec.ok,
    })
}

fn cauchy_checks(a: &SkewMatrix, cfg: &FuzzConfig, rec: &mut Recorder, worst: &mut Worst) -> Result<()> {
    let outer = skew_eigenvalues(a)?;
    let scale = outer.max_abs().max(1.0);
    for w in 0..a.n() {
        let inner = skew_eigenvalues(&a.delete(w))?;
        let c = check_interlacing(&outer.imag_parts, &inner.imag_parts, false, cfg.cauchy_tolerance * scale)?;
        if c.min_margin.is_finite() {
            worst.cauchy_min_margin_rel = opt_min(worst.cauchy_min_margin_rel, c.min_margin / scale);
        }
        rec.check("cauchy_interlacing", c.holds, || {
            format!("deleting vertex {} gives margin {:e}", w + 1, c.min_margin)
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn neb_pipeline(
    t: &Tree,
    v: usize,
    spec: &SpectrumSpec,
    rng: &mut ChaCha8Rng,
    cfg: &FuzzConfig,
    rec: &mut Recorder,
    worst: &mut Worst,
    extension: &mut ExtensionStats,
) -> Result<()> {
    let n = t.n();
    let report = match construct(t, v, spec) {
        Ok(r) => r,
        Err(e) => {
            rec.check("construction", false, || format!("{e} for spectrum {spec:?}"));
            return Ok(());
        }
    };
    rec.check("construction", true, String::new);
    trace_checks(&report, cfg, rec, worst);

    let scale = spec.scale();
    let s = verify_matrix(&report.matrix, t, v, spec, &cfg.tolerances)?;
    worst.lambda_deviation_rel = fmax(worst.lambda_deviation_rel, s.lambda_deviation / scale);
    worst.mu_deviation_rel = fmax(worst.mu_deviation_rel, s.mu_deviation / scale);
    worst.identity_residual = fmax(worst.identity_residual, s.identity_residual);
    rec.check(
        "spectrum_match",
        s.lambda_deviation <= s.eigen_tolerance && s.mu_deviation <= s.eigen_tolerance,
        || format!("deviations {:e}, {:e} against {:e}", s.lambda_deviation, s.mu_deviation, s.eigen_tolerance),
    );
    rec.check("ratio_identity", s.identity_residual <= cfg.tolerances.identity, || {
        format!("residual {:e}", s.identity_residual)
    });
    rec.check("duarte_constructed", s.duarte, || format!("min margin {:e}", s.duarte_min_margin));

    let j = jacobian_f(&report.matrix, t, v)?;
    let ns = is_nonsingular(&j, SINGULAR_TOLERANCE);
    if n > 1 {
        worst.min_jacobian_pivot = opt_min(worst.min_jacobian_pivot, ns.min_pivot);
    }
    rec.check("jacobian_nonsingular", ns.nonsingular, || {
        format!("|det| {:e}, min pivot {:e}", ns.abs_det, ns.min_pivot)
    });

    let non_edges = t.graph().non_edges();
    let Some(&chord) = non_edges.choose(rng) else {
        extension.skipped_no_chord += 1;
        return Ok(());
    };
    extension.attempted += 1;
    let hc = HomotopyConfig {
        epsilon_target: cfg.extend_epsilon,
        ..Default::default()
    };
    match extend(&report.matrix, t, v, &[chord], &hc) {
        Ok(ext) => {
            extension.succeeded += 1;
            let lam = skew_eigenvalues(&ext.matrix)?.deviation(&spec.lambdas);
            let mu = skew_eigenvalues(&ext.matrix.delete(v))?.deviation(&spec.mus);
            let dev = lam.max(mu);
            worst.extension_deviation_rel = fmax(worst.extension_deviation_rel, dev / scale);
            rec.check("extension_spectrum", dev <= cfg.tolerances.eigen * scale, || {
                format!("chord {{{}, {}}}: deviation {dev:e}", chord.0 + 1, chord.1 + 1)
            });
        }
        Err(e) => {
            extension.failed += 1;
            extension.failures.push(Violation {
                trial: rec.trial,
                check: "extension".into(),
                detail: format!("chord {{{}, {}}}: {e}", chord.0 + 1, chord.1 + 1),
            });
        }
    }
    Ok(())
}

fn trace_checks(report: &ConstructionReport, cfg: &FuzzConfig, rec: &mut Recorder, worst: &mut Worst) {
    let mut nodes = Vec::new();
    report.trace.walk(&mut |node| nodes.push(node));
    for node in nodes {
        if node.order < 2 {
            continue;
        }
        let spec = SpectrumSpec::new(node.lambdas.clone(), node.mus.clone());
        let res = residues(&spec);
        let big = res.c.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let small = res.c.iter().fold(f64::INFINITY, |m, &c| m.min(c));
        if big > 0.0 {
            worst.min_residue_rel = opt_min(worst.min_residue_rel, small / big);
        }
        rec.check("residue_positivity", small > 0.0, || {
            format!("residue {small:e} at vertex {}", node.vertex + 1)
        });
        let defect = res.palindromy_defect() / big.max(f64::MIN_POSITIVE);
        worst.palindromy_defect_rel = fmax(worst.palindromy_defect_rel, defect);
        rec.check("residue_palindromy", defect <= cfg.palindromy_tolerance, || {
            format!("relative defect {defect:e} at vertex {}", node.vertex + 1)
        });
        for child in &node.children {
            let c = &child.node;
            if c.order < 2 {
                continue;
            }
            let tol = cfg.tolerances.duarte * spec.scale();
            let ok = check_interlacing(&c.lambdas, &c.mus, true, tol).map(|v| v.holds).unwrap_or(false);
            rec.check("h_root_interlacing", ok, || {
                format!("branch at {} of vertex {}", child.neighbor + 1, node.vertex + 1)
            });
        }
    }
}

/// Canonical string of a tree up to isomorphism (centers plus AHU codes).
pub fn canonical_form(t: &Tree) -> String {
    let n = t.n();
    if n == 1 {
        return "()".into();
    }
    let mut degree: Vec<usize> = (0..n).map(|v| t.neighbors(v).len()).collect();
    let mut layer: Vec<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut remaining = n;
    while remaining > 2 {
        remaining -= layer.len();
        let mut next = Vec::new();
        for &leaf in &layer {
            for &u in t.neighbors(leaf) {
                degree[u] -= 1;
                if degree[u] == 1 {
                    next.push(u);
                }
            }
        }
        layer = next;
    }
    fn encode(t: &Tree, v: usize, parent: Option<usize>) -> String {
        let mut kids: Vec<String> = t
            .neighbors(v)
            .iter()
            .filter(|&&u| Some(u) != parent)
            .map(|&u| encode(t, u, Some(v)))
            .collect();
        kids.sort();
        format!("({})", kids.concat())
    }
    layer
        .iter()
        .map(|&c| encode(t, c, None))
        .min()
        .expect("a tree has a center")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeEntry {
    pub n: usize,
    pub canonical: String,
    /// Representative: the first labeled tree of this shape in Prüfer order.
    pub edges: Vec<[usize; 2]>,
    /// NEB verdict per vertex of the representative, 1-based order.
    pub neb: Vec<bool>,
    /// Whether the construction verified at every NEB vertex.
    pub constructed: Vec<Option<bool>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveReport {
    pub n_max: usize,
    pub shapes: Vec<ShapeEntry>,
    pub labeled_trees: usize,
    /// Labeled trees whose verdicts disagree with their shape representative
    /// under some isomorphism (should be 0).
    pub inconsistent: usize,
}

/// Every tree shape with up to `n_max` vertices, classified at each vertex.
pub fn exhaustive(n_max: usize, seed: u64) -> Result<ExhaustiveReport> {
    if !(1..=MAX_EXHAUSTIVE_ORDER).contains(&n_max) {
        return Err(Error::SizeMismatch(format!(
            "exhaustive mode supports n_max in 1..={MAX_EXHAUSTIVE_ORDER}, got {n_max}"
        )));
    }
    let mut shapes: Vec<ShapeEntry> = Vec::new();
    let mut labeled = 0;
    let mut inconsistent = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 1..=n_max {
        let mut index: BTreeMap<String, usize> = BTreeMap::new();
        let len = n.saturating_sub(2);
        let total = if n <= 2 { 1 } else { n.pow(len as u32) };
        for code_index in 0..total {
            let t = if n <= 2 {
                Tree::path(n)
            } else {
                let mut code = vec![0; len];
                let mut x = code_index;
                for slot in code.iter_mut().rev() {
                    *slot = x % n;
                    x /= n;
                }
                Tree::from_prufer(n, &code)?
            };
            labeled += 1;
            let canonical = canonical_form(&t);
            let verdicts: Vec<bool> = (0..n).map(|v| is_neb(&t, v).map(|c| c.verdict)).collect::<Result<_>>()?;
            match index.get(&canonical) {
                Some(&k) => {
                    let mut a = shapes[k].neb.clone();
                    let mut b = verdicts.clone();
                    a.sort();
                    b.sort();
                    if a != b {
                        inconsistent += 1;
                    }
                }
                None => {
                    let spec_order = n;
                    let constructed = (0..n)
                        .map(|v| {
                            if !verdicts[v] {
                                return Ok(None);
                            }
                            let spec = random_spectrum(&mut rng, spec_order.max(1));
                            let r = construct(&t, v, &spec)?;
                            let s = verify_matrix(&r.matrix, &t, v, &spec, &Tolerances::default())?;
                            Ok(Some(s.passed))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    index.insert(canonical.clone(), shapes.len());
                    shapes.push(ShapeEntry {
                        n,
                        canonical,
                        edges: t.edges().iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
                        neb: verdicts,
                        constructed,
                    });
                }
            }
        }
    }
    Ok(ExhaustiveReport {
        n_max,
        shapes,
        labeled_trees: labeled,
        inconsistent,
    })
}
