//! Subcommand drivers. Each one turns a config section into report rows.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use hrlab::corpus::{generate, harmonic_plateau, near_extremal_hardy, rellich_profile, CorpusSpec};
use hrlab::functionals::{
    lhs_functional, radial_second_derivative_functional, plateau_blowup_report, rhs_hessian_exact,
    rhs_laplacian, rhs_surrogate, EvalOptions,
};
use hrlab::model::{OneDimConfig, RadialProfile, SpaceParams, TestField};
use hrlab::ops1d::{derivative_quotient_check, identity_check, operator_bound_check};
use hrlab::quadrature::{QuadratureRule, DEFAULT_ORDER};
use hrlab::quotients::{
    catalog, maximize_ratio_pn, pn_ratio, reproduce_sharp, rellich_degeneracy, tracked_constant,
    ConstantName, OptimizerOptions, PnProblem, SharpConfig,
};

use crate::config::{FamilyKind, RunConfig};
use crate::rows::{read_csv, read_json, Ctx, Flag, ReportRow, Sink};
use crate::CliError;

/// Per-experiment seed: the first eight bytes of `sha256(root ‖ id)`.
pub fn child_seed(root: u64, id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    h.update(id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

fn compute<E: Display>(e: E) -> CliError {
    CliError::Compute(e.to_string())
}

/// Runs `f` over `items` in parallel, flushing rows in item order.
fn run_items<T, F>(items: &[T], sink: &mut Sink, f: F) -> Result<(), CliError>
where
    T: Sync,
    F: Fn(&T) -> Result<Vec<ReportRow>, CliError> + Sync,
{
    let chunk = 4 * rayon::current_num_threads().max(1);
    for batch in items.chunks(chunk) {
        let out: Vec<Result<Vec<ReportRow>, CliError>> = batch.par_iter().map(&f).collect();
        for rows in out {
            sink.push(rows?)?;
        }
    }
    Ok(())
}

fn space(n: usize, p: f64, a: f64) -> Result<SpaceParams, CliError> {
    SpaceParams::new(n, p, a).map_err(compute)
}

fn radial_corpus(seed: u64, count: usize, params: SpaceParams) -> Result<Vec<TestField>, CliError> {
    generate(&CorpusSpec::random_radial(seed, count, params)).map_err(compute)
}

fn rule(p: &RadialProfile) -> QuadratureRule {
    QuadratureRule::for_profile(p, DEFAULT_ORDER)
}

pub fn verify_1d(cfg: &RunConfig, root: u64, sink: &mut Sink) -> Result<(), CliError> {
    let c = &cfg.verify_1d;
    let one = space(1, 1.0, 0.0)?;

    let seed = child_seed(root, "verify-1d/bound");
    let corpus = radial_corpus(seed, c.corpus_size.max(1), one)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cases: Vec<(usize, OneDimConfig)> = (0..c.cases)
        .map(|i| {
            let p = c.exponents[i % c.exponents.len()];
            let a_op: f64 = rng.gen_range(-1.0..4.0);
            let b_op: f64 = rng.gen_range(-2.0..3.0);
            let alpha = p * (a_op - 1.0) - rng.gen_range(0.05..3.0);
            (i % corpus.len(), OneDimConfig { p, a_op, b_op, alpha })
        })
        .collect();
    let ctx = Ctx::new("verify-1d/bound", seed);
    run_items(&cases, sink, |(k, cfg1)| {
        let base = corpus[*k].profile();
        let prof = if cfg1.p == 1.0 {
            // equality case needs f >= 0
            let abs: Vec<f64> = base.interior().iter().map(|v| v.abs()).collect();
            RadialProfile::from_interior(base.space().clone(), &abs).map_err(compute)?
        } else {
            base.clone()
        };
        let rep = operator_bound_check(cfg1, |x| prof.value(x), &rule(&prof)).map_err(compute)?;
        let ctx = ctx.space(1, cfg1.p, cfg1.alpha);
        let mut rows = vec![ctx.check("bound_ratio", rep.ratio, 1.0, c.tol)];
        if cfg1.p == 1.0 {
            let gap = (rep.lhs - rep.rhs_bound).abs() / rep.rhs_bound;
            rows.push(ctx.check("equality_gap", gap, c.equality_tol, 0.0));
        }
        Ok(rows)
    })?;

    let seed = child_seed(root, "verify-1d/identity");
    let profiles = radial_corpus(seed, c.identity_profiles, one)?;
    let ctx = Ctx::new("verify-1d/identity", seed).space(1, 2.0, 0.0);
    run_items(&profiles, sink, |f| {
        let rep = identity_check(f.profile(), &rule(f.profile()));
        let rel = rep.max_residual / rep.scale.max(f64::MIN_POSITIVE);
        Ok(vec![ctx.check("residual_rel", rel, c.tol, 0.0)])
    })?;

    let seed = child_seed(root, "verify-1d/derivative-quotient");
    let profiles = radial_corpus(seed, c.grid_profiles, one)?;
    let grid: Vec<(usize, usize, f64, f64, usize)> = [(1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (3, 0)]
        .iter()
        .flat_map(|&(n, k)| [(n, k, 1.0, 0.0), (n, k, 3.0, 1.0)])
        .flat_map(|(n, k, p, alpha)| (0..profiles.len()).map(move |j| (n, k, p, alpha, j)))
        .collect();
    let ctx = Ctx::new("verify-1d/derivative-quotient", seed);
    run_items(&grid, sink, |&(n, k, p, alpha, j)| {
        let u = profiles[j].profile();
        let rep = derivative_quotient_check(u, n, k, p, alpha, &rule(u)).map_err(compute)?;
        let ctx = ctx.space(n, p, alpha);
        Ok(vec![
            ctx.check(&format!("ratio_k{k}"), rep.bound.ratio, 1.0, c.tol),
            ctx.check(
                &format!("route_gap_rel_k{k}"),
                rep.route_gap / rep.scale.max(f64::MIN_POSITIVE),
                c.tol,
                0.0,
            ),
        ])
    })
}

#[derive(Debug, Clone)]
struct FamilyOpts {
    count: usize,
    spans: usize,
    degree: usize,
    r_min: f64,
    r_max: f64,
    ell_max: usize,
    radii: Vec<f64>,
}

/// Fields of one family at the given parameters, tagged with a radius where
/// the family is indexed by one.
fn family_fields(
    kind: FamilyKind,
    params: SpaceParams,
    seed: u64,
    o: &FamilyOpts,
) -> Result<Vec<(TestField, Option<f64>)>, CliError> {
    let spec = |family| CorpusSpec {
        seed,
        count: o.count,
        r_min: o.r_min,
        r_max: o.r_max,
        spans: o.spans,
        degree: o.degree,
        params,
        family,
    };
    let untagged = |v: Vec<TestField>| v.into_iter().map(|f| (f, None)).collect();
    Ok(match kind {
        FamilyKind::RandomRadial => untagged(generate(&spec(hrlab::corpus::Family::RandomRadial)).map_err(compute)?),
        FamilyKind::RandomSeparable => untagged(
            generate(&spec(hrlab::corpus::Family::RandomSeparable { ell_max: o.ell_max })).map_err(compute)?,
        ),
        FamilyKind::HarmonicPlateau => o
            .radii
            .iter()
            .map(|&r| {
                let prof = harmonic_plateau(r, o.degree).map_err(compute)?.profile().clone();
                Ok((TestField::separable(prof, 1, params).map_err(compute)?, Some(r)))
            })
            .collect::<Result<_, CliError>>()?,
        FamilyKind::RellichDegeneracy => {
            let mut out = Vec::new();
            for &r in &o.radii {
                let prof = rellich_profile(r, o.degree).map_err(compute)?;
                out.push((TestField::separable(prof.clone(), 1, params).map_err(compute)?, Some(r)));
                out.push((TestField::radial(prof, params), Some(r)));
            }
            out
        }
        FamilyKind::NearExtremalHardy => {
            let prof = near_extremal_hardy(2.0, -3.0, 1e-3, 1e3, 3.0, o.degree).map_err(compute)?;
            vec![(TestField::radial(prof, params), None)]
        }
    })
}

fn kind_name(kind: FamilyKind) -> &'static str {
    match kind {
        FamilyKind::RandomRadial => "random_radial",
        FamilyKind::RandomSeparable => "random_separable",
        FamilyKind::HarmonicPlateau => "harmonic_plateau",
        FamilyKind::RellichDegeneracy => "rellich_degeneracy",
        FamilyKind::NearExtremalHardy => "near_extremal_hardy",
    }
}

const ALL_FAMILIES: [FamilyKind; 5] = [
    FamilyKind::RandomRadial,
    FamilyKind::RandomSeparable,
    FamilyKind::HarmonicPlateau,
    FamilyKind::RellichDegeneracy,
    FamilyKind::NearExtremalHardy,
];

pub fn verify_decomp(cfg: &RunConfig, root: u64, sink: &mut Sink) -> Result<(), CliError> {
    let c = &cfg.verify_decomp;
    let eval = EvalOptions::default();
    let fam = FamilyOpts {
        count: c.count,
        spans: 12,
        degree: 5,
        r_min: 0.1,
        r_max: 10.0,
        ell_max: 3,
        radii: vec![16.0, 256.0, 4096.0],
    };

    let mut items = Vec::new();
    for &n in &c.dims {
        for &a in &c.weights {
            let params = space(n, n as f64, a)?;
            let bound = tracked_constant(n, a).map_err(compute)?;
            for kind in ALL_FAMILIES {
                let id = format!("verify-decomp/surrogate/{}", kind_name(kind));
                let seed = child_seed(root, &format!("{id}/{n}/{a}"));
                for (f, r) in family_fields(kind, params, seed, &fam)? {
                    items.push((id.clone(), seed, bound, f, r));
                }
            }
        }
    }
    run_items(&items, sink, |(id, seed, bound, f, r)| {
        let pr = f.params();
        let mut ctx = Ctx::new(id, *seed).space(pr.n, pr.p, pr.a).ell(f.ell());
        if let Some(r) = r {
            ctx = ctx.radius(*r);
        }
        let lhs = lhs_functional(f, &eval).map_err(compute)?.lhs;
        let rhs = rhs_surrogate(f, &eval).map_err(compute)?;
        Ok(vec![ctx.check("chain_ratio", lhs / (bound * rhs), 1.0, c.tol)])
    })?;

    let mut radial = Vec::new();
    for n in 1..=c.radial_max_dim {
        for &a in &c.weights {
            let params = space(n, n as f64, a)?;
            let seed = child_seed(root, &format!("verify-decomp/radial/{n}/{a}"));
            for f in radial_corpus(seed, c.count, params)? {
                radial.push((seed, f));
            }
            let prof = rellich_profile(64.0, 5).map_err(compute)?;
            radial.push((seed, TestField::radial(prof, params)));
        }
    }
    run_items(&radial, sink, |(seed, f)| {
        let pr = f.params();
        let ctx = Ctx::new("verify-decomp/radial", *seed).space(pr.n, pr.p, pr.a).ell(0);
        let lhs = lhs_functional(f, &eval).map_err(compute)?.lhs;
        let rhs = radial_second_derivative_functional(f, &eval).map_err(compute)?;
        Ok(vec![ctx.check("chain_ratio", lhs * (1.0 - pr.a) / rhs, 1.0, c.tol)])
    })?;

    let seed = child_seed(root, "verify-decomp/bochner");
    let half = c.bochner_fields / 2;
    let mut fields = Vec::new();
    for (i, n) in [2usize, 3].into_iter().enumerate() {
        let count = if i == 0 { half } else { c.bochner_fields - half };
        let spec = CorpusSpec::random_separable(seed ^ n as u64, count, space(n, 2.0, 0.0)?, 3);
        fields.extend(generate(&spec).map_err(compute)?);
    }
    run_items(&fields, sink, |f| {
        let pr = f.params();
        let ctx = Ctx::new("verify-decomp/bochner", seed).space(pr.n, pr.p, pr.a).ell(f.ell());
        let lap = rhs_laplacian(f, &eval).map_err(compute)?;
        let hess = rhs_hessian_exact(f, &eval).map_err(compute)?;
        Ok(vec![ctx.check("relative_gap", (hess - lap).abs() / lap, c.bochner_tol, 0.0)])
    })
}

pub fn constants(cfg: &RunConfig, root: u64, sink: &mut Sink) -> Result<(), CliError> {
    let c = &cfg.constants;
    let seed = child_seed(root, "constants");
    let mut rows = Vec::new();
    println!("{:<18} {:>3} {:>6} {:>20}", "constant", "N", "p", "value");
    for &n in &c.dims {
        for name in [ConstantName::Hardy, ConstantName::Rellich, ConstantName::HardyRellichP2] {
            if let Ok(e) = catalog(name, n, c.p) {
                println!("{:<18} {:>3} {:>6} {:>20.16}", name.as_str(), n, c.p, e.value);
                rows.push(Ctx::new(&format!("constants/{}", name.as_str()), seed).space(n, c.p, 0.0).explore("catalog", e.value));
            }
        }
    }
    println!();
    println!("{:<18} {:>3} {:>6} {:>20}", "tracked", "N", "a", "value");
    for &n in &c.dims {
        for &a in &c.weights {
            if let Ok(v) = tracked_constant(n, a) {
                println!("{:<18} {:>3} {:>6} {:>20.16}", "tracked", n, a, v);
                rows.push(Ctx::new("constants/tracked", seed).space(n, n as f64, a).explore("tracked_constant", v));
            }
        }
    }
    sink.push(rows)
}

pub fn quotient(cfg: &RunConfig, root: u64, sink: &mut Sink) -> Result<(), CliError> {
    let c = &cfg.quotient;
    let sharp = SharpConfig {
        r_min: c.r_min,
        r_max: c.r_max,
        per_decade: c.per_decade,
        degree: c.degree,
        ell_max: c.ell_max,
    };
    for (&(problem, n), &tol) in c.sharp.iter().zip(&c.sharp_tol) {
        let id = format!("quotient/{}", problem.as_str());
        let seed = child_seed(root, &format!("{id}/{n}"));
        let rep = reproduce_sharp(problem, n, 0.0, &sharp).map_err(compute)?;
        let ctx = Ctx::new(&id, seed).space(n, 2.0, 0.0);
        let mut rows: Vec<ReportRow> = rep
            .per_mode
            .iter()
            .map(|m| ctx.ell(m.ell).explore("mode_value", m.value))
            .collect();
        let best = ctx.ell(rep.best.ell);
        rows.push(best.explore("basis_size", rep.basis_size as f64));
        rows.push(best.check("residual", rep.best.residual, 1e-8, 0.0));
        match rep.catalog {
            Some(target) => {
                rows.push(best.check("value_over_catalog", rep.best.value / target, 1.0, 1e-3));
                rows.push(best.check("shortfall", 1.0 - rep.best.value / target, tol, 0.0));
            }
            None => rows.push(best.explore("value", rep.best.value)),
        }
        sink.push(rows)?;
    }

    for &n in &c.critical_dims {
        let params = space(n, n as f64, c.weight)?;
        for &problem in &c.critical {
            let id = format!("quotient/{}", problem.as_str());
            let seed = child_seed(root, &format!("{id}/{n}"));
            let mut spec = CorpusSpec::random_separable(seed, c.starts, params, 2);
            spec.spans = 10;
            let starts = generate(&spec).map_err(compute)?;
            let opts = OptimizerOptions {
                budget: c.budget,
                starts: c.starts,
                seed,
                ..OptimizerOptions::default()
            };
            let rep = maximize_ratio_pn(problem, &params, &starts, &opts).map_err(compute)?;
            let ctx = Ctx::new(&id, seed).space(n, n as f64, c.weight).ell(rep.ell);
            let mut rows = vec![
                ctx.explore("evaluations", rep.evaluations as f64),
                ctx.explore("budget_exhausted", rep.budget_exhausted as u8 as f64),
            ];
            rows.push(match (problem, rep.tracked_bound) {
                (PnProblem::ThmVsSurrogate, Some(b)) => ctx.check("max_ratio", rep.value, b, 1e-6),
                _ => ctx.explore("max_ratio", rep.value),
            });
            sink.push(rows)?;
        }
    }
    Ok(())
}

fn radii(k_min: i32, k_max: i32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 2f64.powi(k)).collect()
}

pub fn degeneracy(cfg: &RunConfig, root: u64, sink: &mut Sink) -> Result<(), CliError> {
    let c = &cfg.degeneracy;
    let seed = child_seed(root, "degeneracy");
    let rs = radii(c.k_min, c.k_max);
    let rep = rellich_degeneracy(&rs, c.degree).map_err(compute)?;
    let ctx = Ctx::new("degeneracy", seed).space(2, 2.0, 0.0);
    let mut rows = Vec::new();
    for (i, &r) in rep.radii.iter().enumerate() {
        let at = ctx.radius(r);
        rows.push(at.ell(1).explore("quotient", rep.dipole[i]));
        rows.push(at.ell(0).explore("quotient", rep.radial[i]));
        rows.push(at.ell(1).explore("quotient_linear_ramp", rep.linear_ramp[i]));
    }
    let step = rep
        .dipole
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    rows.push(ctx.ell(1).check("max_step_ratio", step, 1.0, 0.0));
    rows.push(ctx.ell(1).check("final_quotient", rep.final_value, c.final_max, 0.0));
    rows.push(ctx.ell(0).check("inverse_floor", 1.0 / rep.radial_floor, 1.0 / c.floor_min, 0.0));
    sink.push(rows)
}

pub fn stress(cfg: &RunConfig, root: u64, sink: &mut Sink) -> Result<(), CliError> {
    let c = &cfg.stress;
    let seed = child_seed(root, "stress");
    let rs = radii(c.k_min, c.k_max);
    let eval = EvalOptions::default();
    let reps = rs
        .par_iter()
        .map(|&r| {
            let f = harmonic_plateau(r, c.degree).map_err(compute)?;
            plateau_blowup_report(&f, r, &eval).map_err(compute)
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let ctx = Ctx::new("stress", seed).space(2, 2.0, 0.0).ell(1);
    let mut rows = Vec::new();
    for rep in &reps {
        let at = ctx.radius(rep.r_cut);
        rows.push(at.explore("hardy_term", rep.hardy_term));
        rows.push(at.explore("rellich_term", rep.rellich_term));
        rows.push(at.explore("lap_term", rep.lap_term));
        rows.push(at.explore("grad_quotient", rep.grad_quotient));
        rows.push(at.check("identity_residual_rel", rep.identity_residual / rep.scale, c.tol, 0.0));
    }
    if let (Some(first), Some(last)) = (reps.first(), reps.last()) {
        let mut laps: Vec<f64> = reps.iter().map(|r| r.lap_term).collect();
        laps.sort_by(f64::total_cmp);
        let median = laps[laps.len() / 2];
        let spread = laps.iter().map(|&v| (v / median).max(median / v)).fold(1.0, f64::max);
        rows.push(ctx.check("lap_spread", spread, c.spread_max, 0.0));
        rows.push(ctx.check("hardy_growth_inverse", first.hardy_term / last.hardy_term, 1.0 / c.growth_min, 0.0));
        rows.push(ctx.check(
            "rellich_growth_inverse",
            first.rellich_term / last.rellich_term,
            1.0 / c.growth_min,
            0.0,
        ));
    }
    sink.push(rows)
}

pub fn sweep(cfg: &RunConfig, root: u64, sink: &mut Sink) -> Result<(), CliError> {
    let c = &cfg.sweep;
    let eval = EvalOptions::default();
    let fam = FamilyOpts {
        count: c.count,
        spans: c.spans,
        degree: c.degree,
        r_min: c.r_min,
        r_max: c.r_max,
        ell_max: c.ell_max,
        radii: c.radii.clone(),
    };
    let mut items = Vec::new();
    for &n in &c.dims {
        for &a in &c.weights {
            let params = space(n, n as f64, a)?;
            let bound = tracked_constant(n, a).map_err(compute)?;
            for &kind in &c.families {
                let id = format!("sweep/{}", kind_name(kind));
                let seed = child_seed(root, &format!("{id}/{n}/{a}"));
                for (f, r) in family_fields(kind, params, seed, &fam)? {
                    items.push((id.clone(), seed, bound, f, r));
                }
            }
        }
    }
    run_items(&items, sink, |(id, seed, bound, f, r)| {
        let pr = f.params();
        let mut ctx = Ctx::new(id, *seed).space(pr.n, pr.p, pr.a).ell(f.ell());
        if let Some(r) = r {
            ctx = ctx.radius(*r);
        }
        let mut rows = Vec::new();
        for problem in [PnProblem::ThmVsSurrogate, PnProblem::ThmVsLap, PnProblem::ThmVsHessExact] {
            let v = pn_ratio(problem, f, &eval).map_err(compute)?;
            rows.push(match problem {
                PnProblem::ThmVsSurrogate => ctx.check(problem.as_str(), v, *bound, c.tol),
                _ => ctx.explore(problem.as_str(), v),
            });
        }
        Ok(rows)
    })
}

/// Pass/fail/exploratory counts and empirical maxima over earlier artifacts.
pub fn report(cfg: &RunConfig, out: &std::path::Path, sink: &mut Sink) -> Result<(), CliError> {
    let inputs: Vec<PathBuf> = if cfg.report.inputs.is_empty() {
        let mut v: Vec<PathBuf> = std::fs::read_dir(out)
            .map_err(|source| CliError::Io {
                path: out.to_path_buf(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                let name = p.file_name().and_then(|s| s.to_str()).unwrap_or("");
                name.ends_with(".csv") && !name.ends_with(".partial.csv") && name != "report.csv"
            })
            .collect();
        v.sort();
        v
    } else {
        cfg.report.inputs.clone()
    };
    let mut counts: BTreeMap<String, [usize; 3]> = BTreeMap::new();
    let mut maxima: BTreeMap<(String, String), f64> = BTreeMap::new();
    for path in &inputs {
        let rows = if path.extension().is_some_and(|e| e == "json") {
            read_json(path)?.rows
        } else {
            read_csv(path)?
        };
        for row in rows {
            let slot = match row.flag {
                Flag::Pass => 0,
                Flag::Fail => 1,
                Flag::Exploratory => 2,
            };
            counts.entry(row.experiment.clone()).or_default()[slot] += 1;
            let m = maxima.entry((row.experiment, row.metric)).or_insert(f64::NEG_INFINITY);
            if row.value > *m || row.value.is_nan() {
                *m = m.max(row.value);
            }
        }
    }
    println!("{:<48} {:>7} {:>7} {:>12}", "experiment", "pass", "fail", "exploratory");
    let mut rows = Vec::new();
    for (exp, [pass, fail, explore]) in &counts {
        println!("{exp:<48} {pass:>7} {fail:>7} {explore:>12}");
        let ctx = Ctx::new(exp, 0);
        rows.push(ctx.explore("pass_count", *pass as f64));
        rows.push(ctx.explore("exploratory_count", *explore as f64));
        rows.push(ctx.check("fail_count", *fail as f64, 0.0, 0.0));
    }
    println!();
    println!("{:<48} {:<28} {:>24}", "experiment", "metric", "max value");
    for ((exp, metric), v) in &maxima {
        println!("{exp:<48} {metric:<28} {v:>24.16e}");
        rows.push(Ctx::new(exp, 0).explore(&format!("max_{metric}"), *v));
    }
    sink.push(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn child_seeds_split_by_id() {
        assert_eq!(child_seed(1, "a"), child_seed(1, "a"));
        assert_ne!(child_seed(1, "a"), child_seed(1, "b"));
        assert_ne!(child_seed(1, "a"), child_seed(2, "a"));
    }
}
