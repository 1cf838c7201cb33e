use std::fmt;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use hypboundary::boundary::{almost_invariance_report, count, cylinders, ps_measure};
use hypboundary::classify::{cross_ratio_distortion, equivalence_verdict};
use hypboundary::group::{ball, count_sphere, sphere, DEFAULT_ENUMERATION_CAP};
use hypboundary::metric::perron_eigen;
use hypboundary::representation::{
    cocycle_check, convergence_report, cyclicity_report, p_half_l1_norm, p_tilde_sums, projection_report, s_r,
    unitarity_check, KernelSpec, StepFunction,
};
use hypboundary::shadows::{cone_growth_report, double_shadows_cover, shadows_cover, ShadowParams};
use hypboundary::{
    BoundaryPoint, Cylinder, Error, Letter, MarkovMeasure, Metric, MetricSpec, MetricVariant, QuadSurd,
    ReducedWord, Scalar,
};

use crate::cache;
use crate::config::{parse_spec, ConfigError, Experiment, ExperimentConfig};
use crate::output::{num, Assertion, Outcome};

#[derive(Debug)]
pub enum RunError {
    Config(ConfigError),
    Core(Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(ConfigError::Cap(_)) | RunError::Core(Error::EnumerationCap { .. }) => 3,
            RunError::Config(_) | RunError::Core(_) => 2,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        RunError::Core(e)
    }
}

type Run = Result<Outcome, RunError>;

const MAX_RADIUS: usize = 12;
const MAX_DEPTH: usize = 12;

pub struct Context {
    pub cache_dir: PathBuf,
}

impl Context {
    fn metric(&self, spec: &MetricSpec) -> Result<Metric, RunError> {
        Ok(cache::load_metric(&self.cache_dir, spec)?)
    }

    fn metric_of(&self, cfg: &ExperimentConfig, default: &str) -> Result<Metric, RunError> {
        self.metric(&cfg.spec_or(default)?)
    }
}

pub fn run(exp: Experiment, cfg: &ExperimentConfig, ctx: &Context) -> Run {
    match exp {
        Experiment::Growth => growth(cfg, ctx),
        Experiment::Unitarity => unitarity(cfg, ctx),
        Experiment::Shadows => shadows(cfg, ctx),
        Experiment::Cones => cones(cfg, ctx),
        Experiment::L1norms => l1norms(cfg, ctx),
        Experiment::Boundedness => boundedness(cfg, ctx),
        Experiment::Converge => converge(cfg, ctx),
        Experiment::Cyclicity => cyclicity(cfg, ctx),
        Experiment::Projections => projections(cfg, ctx),
        Experiment::Green => green(cfg, ctx),
        Experiment::Classify => classify(cfg, ctx),
        Experiment::SquareMeasure => square_measure(cfg, ctx),
    }
}

fn params(cfg: &ExperimentConfig, metric: &Metric) -> Result<ShadowParams, RunError> {
    let d = ShadowParams::defaults(metric);
    Ok(ShadowParams::new(
        cfg.rho.unwrap_or(d.rho),
        cfg.rho_double.unwrap_or(d.rho_double),
        cfg.half_width.unwrap_or(d.half_width),
    )?)
}

fn range(lo: usize, hi: usize) -> Vec<f64> {
    (lo..=hi).map(|r| r as f64).collect()
}

fn interval(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
}

fn growth(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let metric = ctx.metric_of(cfg, "standard")?;
    let radii = cfg.int_radii_or(&range(1, 10), MAX_RADIUS)?;
    let a = *metric.alphabet();
    let omega = metric.growth().omega;
    let spread_bound = cfg.threshold.unwrap_or(3.0);
    let mut out = Outcome::new(vec!["R", "sphere", "sphere_formula", "ball", "ball_over_omega_R"]);
    let mut wrong = Vec::new();
    let mut ratios = Vec::new();
    for &r in &radii {
        let sphere_len = sphere(&a, r, DEFAULT_ENUMERATION_CAP)?.len() as u128;
        let formula = if r == 0 {
            1
        } else {
            a.size() as u128 * (a.branching() as u128).pow(r as u32 - 1)
        };
        if sphere_len != formula {
            wrong.push(format!("R={r}"));
        }
        let ball_len = metric.ball(r as f64, DEFAULT_ENUMERATION_CAP)?.len();
        let ratio = ball_len as f64 / omega.powi(r as i32);
        ratios.push(ratio);
        out.row(vec![r.into(), sphere_len.into(), formula.into(), ball_len.into(), ratio.into()]);
    }
    let (lo, hi) = interval(ratios.iter().copied());
    out.assert(
        "sphere_exact",
        Assertion::new(wrong.len(), 0, wrong.is_empty()).with_failing(wrong),
    );
    out.assert("ball_ratio_spread", Assertion::at_most(hi / lo, spread_bound));
    out.note("ball_ratio_interval", json!([num(lo), num(hi)]));
    out.note("omega", num(omega));
    Ok(out)
}

fn random_step<S: Scalar>(metric: &Metric, depth: usize, rng: &mut ChaCha8Rng) -> StepFunction<S> {
    let a = *metric.alphabet();
    let coeffs = (0..count(&a, depth)).map(|_| S::from_ratio(rng.gen_range(-5..=5), 1)).collect();
    StepFunction::new(a, depth, coeffs).expect("coefficient count matches depth")
}

fn unitarity(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let metric = ctx.metric_of(cfg, "standard")?;
    if metric.is_standard() {
        unitarity_with::<QuadSurd>(cfg, &metric, 0.0)
    } else {
        unitarity_with::<f64>(cfg, &metric, cfg.threshold.unwrap_or(1e-10))
    }
}

fn unitarity_with<S: Scalar>(cfg: &ExperimentConfig, metric: &Metric, tol: f64) -> Run {
    let a = *metric.alphabet();
    let mu = ps_measure::<S>(metric)?;
    let max_len = cfg.usize_or(cfg.max_len, 3, 4, "max_len")?;
    let depth = cfg.usize_or(cfg.depth, 8, 9, "depth")?;
    if depth < 2 * max_len + 2 {
        return Err(ConfigError::Invalid(format!("depth must be at least {}", 2 * max_len + 2)).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let words = ball(&a, max_len, DEFAULT_ENUMERATION_CAP)?;
    let unit_phis: Vec<StepFunction<S>> = (0..2).map(|_| random_step(metric, depth, &mut rng)).collect();
    // cocycle functions are chosen so that π(g)π(h)φ still lives at `depth`
    let cocycle_depth = depth - 2 * max_len;
    let cocycle_phis = vec![random_step::<S>(metric, cocycle_depth, &mut rng)];
    let pairs: Vec<(ReducedWord, ReducedWord)> = words
        .iter()
        .flat_map(|g| words.iter().map(move |h| (g.clone(), h.clone())))
        .collect();
    let unit = unitarity_check(&mu, &words, &unit_phis, tol)?;
    let cocycle = cocycle_check(&mu, &pairs, &cocycle_phis, tol)?;
    let mut out = Outcome::new(vec!["check", "phi_depth", "cases", "checked", "max_defect", "failures"]);
    out.row(vec![
        "unitarity".into(),
        depth.into(),
        words.len().into(),
        unit.checked.into(),
        unit.max_defect.into(),
        unit.failures.into(),
    ]);
    out.row(vec![
        "cocycle".into(),
        cocycle_depth.into(),
        pairs.len().into(),
        cocycle.checked.into(),
        cocycle.max_defect.into(),
        cocycle.failures.into(),
    ]);
    out.assert("unitarity", Assertion::new(num(unit.max_defect), num(tol), unit.passed()));
    out.assert("cocycle", Assertion::new(num(cocycle.max_defect), num(tol), cocycle.passed()));
    out.note("exact", S::EXACT);
    Ok(out)
}

fn shadows(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let metric = ctx.metric_of(cfg, "standard")?;
    let p = params(cfg, &metric)?;
    let radii = cfg.radii_or(&range(1, 8))?;
    if radii.iter().any(|&r| r > 10.0) {
        return Err(ConfigError::Cap("radius above 10".into()).into());
    }
    let mut out = Outcome::new(vec![
        "R",
        "annulus",
        "single_depth",
        "single_uncovered",
        "double_depth",
        "double_uncovered",
    ]);
    let (mut single_fail, mut double_fail) = (Vec::new(), Vec::new());
    for &r in &radii {
        let s = shadows_cover(&metric, r, &p)?;
        let d = double_shadows_cover(&metric, r, &p)?;
        if !s.covered() {
            single_fail.push(format!("R={r}: {} cells", s.uncovered_count));
        }
        if !d.covered() {
            double_fail.push(format!("R={r}: {} cells", d.uncovered_count));
        }
        out.row(vec![
            r.into(),
            s.annulus_size.into(),
            s.depth.into(),
            s.uncovered_count.into(),
            d.depth.into(),
            d.uncovered_count.into(),
        ]);
    }
    out.assert(
        "shadows_cover",
        Assertion::new(single_fail.len(), 0, single_fail.is_empty()).with_failing(single_fail),
    );
    out.assert(
        "double_shadows_cover",
        Assertion::new(double_fail.len(), 0, double_fail.is_empty()).with_failing(double_fail),
    );
    out.note("params", json!({"rho": p.rho, "rho_double": p.rho_double, "half_width": p.half_width}));
    Ok(out)
}

fn random_word(metric: &Metric, len: usize, rng: &mut ChaCha8Rng) -> ReducedWord {
    let a = metric.alphabet();
    let mut letters: Vec<Letter> = Vec::with_capacity(len);
    for _ in 0..len {
        let options: Vec<Letter> = a.successors(letters.last().copied()).collect();
        letters.push(options[rng.gen_range(0..options.len())]);
    }
    ReducedWord::from_letters(letters).expect("successors keep words reduced")
}

/// Eventually periodic points with a preperiod of 0..4 letters and a period of 1..3.
fn random_points(metric: &Metric, n: usize, rng: &mut ChaCha8Rng) -> Vec<BoundaryPoint> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let pre_len = rng.gen_range(0..=4);
        let per_len = rng.gen_range(1..=3);
        let pre = random_word(metric, pre_len, rng);
        let per = random_word(metric, per_len, rng);
        if let Ok(p) = BoundaryPoint::new(pre, per) {
            if !out.contains(&p) {
                out.push(p);
            }
        }
    }
    out
}

fn cones(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let metric = ctx.metric_of(cfg, "standard")?;
    let p = params(cfg, &metric)?;
    let rhos = match cfg.rho {
        Some(r) => vec![r],
        None => vec![1.0, 2.0, 3.0],
    };
    let lo = rhos.iter().copied().fold(f64::INFINITY, f64::min).floor() as usize;
    let radii = cfg.radii_or(&range(lo, 8))?;
    if radii.iter().any(|&r| r > 10.0) {
        return Err(ConfigError::Cap("radius above 10".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let samples = random_points(&metric, 5, &mut rng);
    let report = cone_growth_report(&metric, &samples, &rhos, &radii, &p)?;
    let mut out = Outcome::new(vec!["xi", "rho", "R", "members", "annulus", "ratio"]);
    for r in report.rows.iter().filter(|r| r.radius >= r.rho) {
        out.row(vec![
            r.xi.to_string().into(),
            r.rho.into(),
            r.radius.into(),
            r.members.into(),
            r.annulus_size.into(),
            r.ratio.into(),
        ]);
    }
    out.assert("cone_spread", Assertion::at_most(report.spread(), cfg.threshold.unwrap_or(10.0)));
    out.note("ratio_interval", json!([num(report.min_ratio), num(report.max_ratio)]));
    out.note("samples", json!(samples.iter().map(|x| x.to_string()).collect::<Vec<_>>()));
    Ok(out)
}

/// 3^{−n/2}(1 + n/2) in ℚ(√3).
fn standard_l1_closed_form(n: usize) -> QuadSurd {
    let half = QuadSurd::rational(2 + n as i128, 2);
    let pow = QuadSurd::rational(1, 3i128.pow((n / 2) as u32));
    let root = if n % 2 == 1 {
        Scalar::sqrt(&QuadSurd::rational(1, 3)).expect("1/3 has a root in Q(√3)")
    } else {
        QuadSurd::rational(1, 1)
    };
    half * pow * root
}

/// Word lengths whose sphere is larger than this are sampled.
const L1_EXHAUSTIVE: u128 = 100_000;
const L1_SAMPLE: usize = 4096;

fn l1norms(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let metric = ctx.metric_of(cfg, "standard")?;
    let max_len = cfg.usize_or(cfg.max_len, 12, MAX_RADIUS, "max_len")?;
    let a = *metric.alphabet();
    let omega = metric.growth().omega;
    let mut out = Outcome::new(vec!["n", "words", "min_norm", "max_norm", "closed_form", "mismatches", "ratio_min", "ratio_max"]);
    let mut mismatched = Vec::new();
    let (mut rlo, mut rhi) = (f64::INFINITY, f64::NEG_INFINITY);
    let standard = metric.is_standard() && a.rank() == 2;
    let (exact, approx) = if standard {
        (Some(ps_measure::<QuadSurd>(&metric)?), None)
    } else {
        (None, Some(ps_measure::<f64>(&metric)?))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let mut sampled = Vec::new();
    for n in 0..=max_len {
        let words = if count_sphere(&a, n) <= L1_EXHAUSTIVE {
            sphere(&a, n, DEFAULT_ENUMERATION_CAP)?
        } else {
            sampled.push(n);
            (0..L1_SAMPLE).map(|_| random_word(&metric, n, &mut rng)).collect()
        };
        let (norms, misses, closed) = match (&exact, &approx) {
            (Some(mu), _) => {
                let target = standard_l1_closed_form(n);
                let mut misses = 0usize;
                let mut norms = Vec::with_capacity(words.len());
                for g in &words {
                    let v = p_half_l1_norm(mu, g)?;
                    if v != target {
                        misses += 1;
                    }
                    norms.push(v.to_f64());
                }
                (norms, misses, num(target.to_f64()))
            }
            (None, Some(mu)) => {
                let norms = words.iter().map(|g| p_half_l1_norm(mu, g)).collect::<Result<Vec<_>, _>>()?;
                (norms, 0, json!(null))
            }
            _ => unreachable!(),
        };
        if misses > 0 {
            mismatched.push(format!("n={n}: {misses} words"));
        }
        let ratios = words.iter().zip(&norms).map(|(g, v)| {
            let len = metric.word_length(g);
            v / (omega.powf(-len / 2.0) * (1.0 + len))
        });
        let (lo, hi) = interval(ratios);
        rlo = rlo.min(lo);
        rhi = rhi.max(hi);
        let (nlo, nhi) = interval(norms.iter().copied());
        out.row(vec![
            n.into(),
            words.len().into(),
            nlo.into(),
            nhi.into(),
            closed.as_f64().map(Into::into).unwrap_or_else(|| "".into()),
            misses.into(),
            lo.into(),
            hi.into(),
        ]);
    }
    if standard {
        out.assert(
            "closed_form_exact",
            Assertion::new(mismatched.len(), 0, mismatched.is_empty()).with_failing(mismatched),
        );
        out.assert(
            "ratio_in_unit_half",
            Assertion::new(json!([num(rlo), num(rhi)]), json!([0.5, 1.0]), rlo >= 0.5 && rhi <= 1.0),
        );
    } else {
        let bound = cfg.threshold.unwrap_or(10.0);
        out.assert("ratio_spread", Assertion::at_most(rhi / rlo, bound));
    }
    out.note("ratio_interval", json!([num(rlo), num(rhi)]));
    out.note("sampled_lengths", json!(sampled));
    out.note("sample_size", L1_SAMPLE);
    Ok(out)
}

fn boundedness(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let metric = ctx.metric_of(cfg, "standard")?;
    if metric.is_standard() {
        boundedness_with::<QuadSurd>(cfg, &metric)
    } else {
        boundedness_with::<f64>(cfg, &metric)
    }
}

fn boundedness_with<S: Scalar>(cfg: &ExperimentConfig, metric: &Metric) -> Run {
    let a = *metric.alphabet();
    let mu = ps_measure::<S>(metric)?;
    let standard = metric.is_standard();
    let radii = cfg.int_radii_or(&if standard { range(1, 8) } else { range(4, 8) }, 9)?;
    let p = params(cfg, metric)?;
    let omega = metric.growth().omega;
    let one = KernelSpec::constant(a, S::one())?;
    let mut out = Outcome::new(vec!["R", "words", "max_sum_over_omega_R", "closed_form", "s_r_sup_density"]);
    let (mut worst, mut closed_gap) = (0.0f64, 0.0f64);
    for &r in &radii {
        let words = if standard {
            sphere(&a, r, DEFAULT_ENUMERATION_CAP)?
        } else {
            metric.annulus(r as f64, p.half_width, DEFAULT_ENUMERATION_CAP)?.members
        };
        let longest = words.iter().map(|g| g.len()).max().unwrap_or(0);
        let terms: Vec<(ReducedWord, f64)> = words.iter().map(|g| (g.clone(), 1.0)).collect();
        let sums = p_tilde_sums(&mu, &terms, longest + 1)?;
        let value = sums.into_iter().fold(0.0, f64::max) / omega.powi(r as i32);
        worst = worst.max(value);
        let closed = if standard {
            let rr = r as f64;
            let c = (2.0 + (2.0 * rr - 2.0) / 3.0) / (1.0 + rr / 2.0);
            closed_gap = closed_gap.max((value - c).abs());
            Some(c)
        } else {
            None
        };
        let density = s_r(&mu, metric, r as f64, &one, &p)?.sup_density(&mu)?;
        out.row(vec![
            r.into(),
            words.len().into(),
            value.into(),
            closed.map(Into::into).unwrap_or_else(|| "".into()),
            density.into(),
        ]);
    }
    if standard {
        out.assert("uniform_bound", Assertion::at_most(worst, cfg.threshold.unwrap_or(2.0)));
        out.assert("closed_form", Assertion::at_most(closed_gap, 1e-10));
    } else {
        out.assert("uniform_bound", Assertion::at_most(worst, cfg.threshold.unwrap_or(10.0)));
    }
    Ok(out)
}

fn parse_cylinder(s: &str) -> Result<Cylinder, RunError> {
    let w: ReducedWord = s
        .parse()
        .map_err(|e: Error| ConfigError::Invalid(format!("bad cylinder {s:?}: {e}")))?;
    Ok(Cylinder::new(w))
}

fn kernel<S: Scalar>(cfg: &ExperimentConfig, metric: &Metric) -> Result<KernelSpec<S>, RunError> {
    let a = *metric.alphabet();
    let text = cfg.kernel.as_deref().unwrap_or("one");
    if text == "one" {
        return Ok(KernelSpec::constant(a, S::one())?);
    }
    if let Some(rest) = text.strip_prefix("indicator:") {
        if let Some((u, v)) = rest.split_once(',') {
            return Ok(KernelSpec::indicator(a, &parse_cylinder(u)?, &parse_cylinder(v)?)?);
        }
    }
    Err(ConfigError::Invalid(format!("kernel {text:?}, expected \"one\" or \"indicator:<u>,<v>\"")).into())
}

fn converge(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let metric = ctx.metric_of(cfg, "standard")?;
    if metric.is_standard() {
        converge_with::<QuadSurd>(cfg, &metric, 0.0)
    } else {
        converge_with::<f64>(cfg, &metric, 1e-10)
    }
}

fn converge_with<S: Scalar>(cfg: &ExperimentConfig, metric: &Metric, identity_tol: f64) -> Run {
    let a = *metric.alphabet();
    let mu = ps_measure::<S>(metric)?;
    let k = kernel::<S>(cfg, metric)?;
    let radii = cfg.radii_or(&range(3, 8))?;
    if radii.iter().any(|&r| r > 9.0) {
        return Err(ConfigError::Cap("radius above 9".into()).into());
    }
    let depth = cfg.usize_or(cfg.depth, 2, 4, "depth")?;
    let cyls: Vec<Cylinder> = (1..=depth).flat_map(|d| cylinders(&a, d)).collect();
    let pairs: Vec<(Cylinder, Cylinder)> = cyls
        .iter()
        .flat_map(|u| cyls.iter().map(move |v| (u.clone(), v.clone())))
        .collect();
    let p = params(cfg, metric)?;
    let report = convergence_report(&mu, metric, &k, &radii, &pairs, &p)?;
    let mut out = Outcome::new(vec!["R", "u", "v", "value", "target", "residual"]);
    for r in &report.rows {
        out.row(vec![
            r.radius.into(),
            r.u.clone().into(),
            r.v.clone().into(),
            r.value.into(),
            r.target.into(),
            r.residual.into(),
        ]);
    }
    let final_bound = cfg.threshold.unwrap_or(0.1);
    out.assert(
        "envelope_decreasing",
        Assertion::new(
            json!(report.envelope.iter().map(|x| num(*x)).collect::<Vec<_>>()),
            "last < first",
            report.decreasing(),
        ),
    );
    out.assert("final_relative", Assertion::at_most(report.final_relative(), final_bound));
    if cfg.kernel.as_deref().unwrap_or("one") == "one" {
        let gap = report.identity.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
        out.assert("identity_row", Assertion::at_most(gap, identity_tol));
    }
    out.note("max_relative", json!(report.max_relative.iter().map(|x| num(*x)).collect::<Vec<_>>()));
    out.note("monotone", report.monotone);
    out.note("identity", json!(report.identity.iter().map(|x| num(*x)).collect::<Vec<_>>()));
    Ok(out)
}

fn cyclicity(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let metric = ctx.metric_of(cfg, "standard")?;
    let mu = ps_measure::<f64>(&metric)?;
    let depth = cfg.usize_or(cfg.depth, 3, 5, "depth")?;
    let max_len = cfg.usize_or(cfg.max_len, 5, 6, "max_len")?;
    let report = cyclicity_report(&mu, max_len, depth)?;
    let mut out = Outcome::new(vec!["M", "vectors", "rank", "max_residual"]);
    for r in &report.rows {
        out.row(vec![r.max_word_len.into(), r.vectors.into(), r.rank.into(), r.max_residual.into()]);
    }
    let floor = 1e-10;
    out.assert(
        "decreasing",
        Assertion::new(
            json!(report.rows.iter().map(|r| num(r.max_residual)).collect::<Vec<_>>()),
            json!({ "floor": floor }),
            report.decreasing(floor),
        ),
    );
    let bound = cfg.threshold.unwrap_or(1e-6);
    match report.rows.iter().find(|r| r.max_word_len == depth) {
        Some(r) => out.assert("spanned_at_m_equals_n", Assertion::at_most(r.max_residual, bound)),
        None => out.note("spanned_at_m_equals_n", "not reached: max_len < depth"),
    }
    Ok(out)
}

fn projections(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let metric = ctx.metric_of(cfg, "standard")?;
    if metric.is_standard() {
        projections_with::<QuadSurd>(cfg, &metric)
    } else {
        projections_with::<f64>(cfg, &metric)
    }
}

fn projections_with<S: Scalar>(cfg: &ExperimentConfig, metric: &Metric) -> Run {
    let a = *metric.alphabet();
    let mu = ps_measure::<S>(metric)?;
    let e = vec![Cylinder::new(ReducedWord::from_letters(vec![Letter::generator(0)])?)];
    let levels = cfg.radii_or(&range(0, 6))?;
    if levels.iter().any(|&l| l > 12.0) {
        return Err(ConfigError::Cap("level above 12".into()).into());
    }
    let phi = StepFunction::one(a);
    let psi = StepFunction::indicator(a, &e[0]);
    let rows = projection_report(&mu, metric, &e, &phi, &psi, &levels)?;
    let mut out = Outcome::new(vec!["level", "theta", "kernel_depth", "value", "target", "residual", "bound"]);
    let mut outside = Vec::new();
    let mut inexact = Vec::new();
    // balls of radius `level` around points of E resolve depth-1 data once level ≥ max ℓ
    let refined_from = metric.max_letter_length() * psi.depth().max(1) as f64;
    for r in &rows {
        if !r.within_bound() {
            outside.push(format!("level={}", r.level));
        }
        if r.level >= refined_from - 1e-12 && r.residual > 1e-12 {
            inexact.push(format!("level={}", r.level));
        }
        out.row(vec![
            r.level.into(),
            r.theta.into(),
            r.kernel_depth.into(),
            r.value.into(),
            r.target.into(),
            r.residual.into(),
            r.bound.into(),
        ]);
    }
    out.assert(
        "within_bound",
        Assertion::new(outside.len(), 0, outside.is_empty()).with_failing(outside),
    );
    out.assert(
        "exact_when_refined",
        Assertion::new(inexact.len(), 0, inexact.is_empty()).with_failing(inexact),
    );
    out.note("refined_from_level", num(refined_from));
    Ok(out)
}

fn green_walk(spec: &MetricSpec) -> Result<&[f64], RunError> {
    match &spec.variant {
        MetricVariant::Green { walk } => Ok(walk),
        _ => Err(ConfigError::Invalid(format!("{spec} is not a Green metric")).into()),
    }
}

fn green(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let spec = cfg.spec_or("srw")?;
    let walk = green_walk(&spec)?.to_vec();
    let asym_spec = parse_spec(cfg.spec2.as_deref().unwrap_or("green:0.375,0.125"))?;
    green_walk(&asym_spec)?;
    let metric = ctx.metric(&spec)?;
    let asym = ctx.metric(&asym_spec)?;
    let a = *metric.alphabet();
    let solve = metric.green().expect("green metric carries its solve");
    let max_len = cfg.usize_or(cfg.max_len, 10, MAX_DEPTH, "max_len")?;
    let tol = 1e-12;

    let mut summary_letters = Vec::new();
    for s in a.letters() {
        summary_letters.push(json!({
            "letter": s.to_string(),
            "F": num(solve.first_passage[s.code()]),
            "c": num(solve.convergence[s.code()]),
        }));
    }
    let mut out = Outcome::new(vec!["depth", "cells", "harmonic_matches_uniform", "asym_min", "asym_max"]);

    let srw = walk.iter().all(|&w| w == walk[0]);
    if srw {
        let q = a.branching() as f64;
        let f_target = 1.0 / q;
        let c_target = q / a.size() as f64;
        let f_err = solve.first_passage.iter().map(|f| (f - f_target).abs()).fold(0.0, f64::max);
        let c_err = solve.convergence.iter().map(|c| (c - c_target).abs()).fold(0.0, f64::max);
        out.assert("first_passage", Assertion::at_most(f_err, tol));
        out.assert("convergence", Assertion::at_most(c_err, tol));
    }
    out.assert("total_mass", Assertion::at_most((solve.total_mass() - 1.0).abs(), tol));
    out.assert("harmonic_identity", Assertion::at_most(solve.harmonic_defect(&a), tol));

    let matrix: Vec<Vec<f64>> = a
        .letters()
        .map(|s| {
            a.letters()
                .map(|t| if t == s.inverse() { 0.0 } else { solve.first_passage[t.code()] })
                .collect()
        })
        .collect();
    let (lambda, _) = perron_eigen(&matrix, false)?;
    out.assert("perron_eigenvalue", Assertion::at_most((lambda - 1.0).abs(), 1e-10));

    let exact_pair = if srw {
        let standard = ctx.metric(&MetricSpec::standard(a.rank()))?;
        Some((ps_measure::<QuadSurd>(&metric)?, ps_measure::<QuadSurd>(&standard)?))
    } else {
        None
    };
    let asym_mu: MarkovMeasure<f64> = ps_measure(&asym)?;
    let asym_a = *asym.alphabet();
    let mut mismatched = Vec::new();
    let (mut glo, mut ghi) = (f64::INFINITY, f64::NEG_INFINITY);
    for d in 1..=max_len {
        let matches = match &exact_pair {
            Some((h, u)) => {
                let ok = h.masses(d) == u.masses(d);
                if !ok {
                    mismatched.push(format!("depth={d}"));
                }
                ok.into()
            }
            None => "".into(),
        };
        let masses = asym_mu.masses(d);
        let (lo, hi) = interval(cylinders(&asym_a, d).iter().enumerate().map(|(i, c)| {
            masses[i] * asym.word_length(c.stem()).exp()
        }));
        glo = glo.min(lo);
        ghi = ghi.max(hi);
        out.row(vec![d.into(), count(&a, d).into(), matches, lo.into(), hi.into()]);
    }
    if srw {
        out.assert(
            "harmonic_equals_uniform",
            Assertion::new(mismatched.len(), 0, mismatched.is_empty()).with_failing(mismatched),
        );
    }
    out.assert("asymmetric_spread", Assertion::at_most(ghi / glo, cfg.threshold.unwrap_or(10.0)));
    out.note("letters", json!(summary_letters));
    out.note("perron_eigenvalue", num(lambda));
    out.note("asymmetric_interval", json!([num(glo), num(ghi)]));
    out.note("asymmetric_spec", asym_spec.to_string());
    Ok(out)
}

fn classify(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let s1 = parse_spec(cfg.spec1.as_deref().or(cfg.spec.as_deref()).unwrap_or("standard"))?;
    let s2 = parse_spec(cfg.spec2.as_deref().unwrap_or("weighted:1,2"))?;
    let m1 = ctx.metric(&s1)?;
    let m2 = ctx.metric(&s2)?;
    let bundle = equivalence_verdict(&m1, &m2)?;
    let mut out = Outcome::new(vec!["method", "verdict", "scale", "max_evidence"]);
    for v in [&bundle.spectrum, &bundle.deviation, &bundle.holder] {
        let worst = v.max_deviation.iter().copied().fold(0.0, f64::max);
        out.row(vec![
            format!("{:?}", v.method).to_lowercase().into(),
            format!("{:?}", v.verdict).to_lowercase().into(),
            v.scale.into(),
            worst.into(),
        ]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
    let points = random_points(&m1, 16, &mut rng);
    let quadruples: Vec<[BoundaryPoint; 4]> = points
        .chunks(4)
        .map(|c| [c[0].clone(), c[1].clone(), c[2].clone(), c[3].clone()])
        .collect();
    let distortion = cross_ratio_distortion(&m1, &m2, &quadruples)?;
    out.assert(
        "directions_agree",
        Assertion::new(bundle.directions_agree(), true, bundle.directions_agree()),
    );
    out.note("verdict", json!(bundle.verdict));
    out.note("A", num(bundle.scale));
    out.note("bundle", bundle.to_json());
    out.note("cross_ratio_distortion", num(distortion));
    out.note("spec1", s1.to_string());
    out.note("spec2", s2.to_string());
    Ok(out)
}

fn square_measure(cfg: &ExperimentConfig, ctx: &Context) -> Run {
    let metric = ctx.metric_of(cfg, "standard")?;
    let mu = ps_measure::<f64>(&metric)?;
    let max_len = cfg.usize_or(cfg.max_len, 5, 6, "max_len")?;
    let depth = cfg.usize_or(cfg.depth, 7, 9, "depth")?;
    let report = almost_invariance_report(&mu, max_len, depth)?;
    let mut out = Outcome::new(vec!["word_len", "words", "classes", "max_abs_log"]);
    for r in &report.rows {
        out.row(vec![r.word_len.into(), r.words.into(), r.classes.into(), r.max_abs_log.into()]);
    }
    let worst = report.max_abs_log();
    out.assert("bounded", Assertion::at_most(worst, cfg.threshold.unwrap_or(10.0)));
    if metric.is_standard() && max_len >= 5 {
        let (r4, r5) = (report.rows[4].max_abs_log, report.rows[5].max_abs_log);
        out.assert(
            "non_increasing_4_to_5",
            Assertion::new(json!([num(r4), num(r5)]), "r5 <= r4", r5 <= r4 + 1e-12),
        );
    }
    Ok(out)
}
