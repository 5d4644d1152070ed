use std::f64::consts::PI;

use serde_json::{json, Value};

use super::{Comparison, Ctx, ExperimentId, SubTest};
use crate::closed_forms::{
    bes3_bridge_cdf, bes3_bridge_marginal, bridge_marginal_cdf, cdf_z, excursion_marginal_cdf, mean_vb,
    meander_cross, meander_joint, meander_m2, meander_marginal, meander_mean, nonmarkov_densities, prob_above_drift,
    q_tilde, second_moment_vb, slope_last_segment_cdf, DensitySpec, Family,
};
use crate::error::Result;
use crate::lattice::{
    conditional_return_law, discrete_checks, nearest_with_parity, quantile_vervaat_multisets_equal, ratio_to_f64,
    z_pmf, ExactPmf, PastEvent,
};
use crate::minorant::{convex_minorant, last_segment_slope, segment_count_stats};
use crate::path::{argmin_first, dual_reverse, shift_cyclic, SampledPath};
use crate::quadrature::{integrate, integrate_to_infinity};
use crate::rng::RngStream;
use crate::samplers::{
    first_hit_bridged, run_replicates, sample_bm, sample_bridge, sample_drifting_excursion, sample_excursion,
    sample_excursion_vervaat, sample_fpb, sample_meander, sample_meander_pair_denisov, sample_vervaat_bm_direct,
    sample_vervaat_bridge_decomposed, sample_vervaat_bridge_with_min, sample_vervaat_bridge_snapped, bes3_bridge_at,
};
use crate::stats::{correlation, fisher_z, fit_through_origin, ks_one_sample, ks_one_sample_mixed, ks_two_sample, mean_se, quantile};

type P = SampledPath<f64>;

/// Cells at each end of a path left out of the Brownian crossing correction:
/// there the path is pinned or conditioned and the free-bridge crossing
/// probability overstates the risk.
const EDGE_CELLS: usize = 8;

const MARGINAL_TIMES: [f64; 3] = [0.25, 0.5, 0.75];

pub(super) fn run(ctx: &mut Ctx) -> Result<()> {
    match ctx.id {
        ExperimentId::Discrete => discrete(ctx),
        ExperimentId::Samplers => samplers(ctx),
        ExperimentId::Decomposition => decomposition(ctx),
        ExperimentId::Duality => duality(ctx),
        ExperimentId::VervaatLimit => vervaat_limit(ctx),
        ExperimentId::BianeShift => biane_shift(ctx),
        ExperimentId::MomentsVb => moments_vb(ctx),
        ExperimentId::MeanderMoments => meander_moments(ctx),
        ExperimentId::AboveDrift => above_drift(ctx),
        ExperimentId::DriftExcursion => drift_excursion(ctx),
        ExperimentId::NonMarkov => non_markov(ctx),
        ExperimentId::DiscreteToContinuum => discrete_to_continuum(ctx),
        ExperimentId::Minorant => minorant(ctx),
    }
}

fn index_of(t: f64, n: usize) -> usize {
    (t * n as f64).round() as usize
}

fn column(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter().map(|r| r[k]).collect()
}

fn ks_one(ctx: &mut Ctx, name: &str, samples: &[f64], cdf: impl Fn(f64) -> f64, floor: f64) -> Result<f64> {
    let stat = ks_one_sample(samples, cdf)?;
    let (thr, why) = ctx.th.ks_one(samples.len(), floor);
    ctx.push(SubTest::new(name, stat, Comparison::Below, thr, why));
    Ok(stat)
}

/// One-sample KS against a density family whose CDF may need quadrature.
fn ks_family(ctx: &mut Ctx, name: &str, samples: &[f64], family: Family, floor: f64) -> Result<f64> {
    let spec = DensitySpec::new(family)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let cdf = spec.cdf_sorted(&sorted)?;
    let lookup = |x: f64| cdf[sorted.partition_point(|&s| s < x)];
    ks_one(ctx, name, samples, lookup, floor)
}

fn ks_two(ctx: &mut Ctx, name: &str, a: &[f64], b: &[f64], floor: f64) -> Result<f64> {
    let stat = ks_two_sample(a, b)?;
    let (thr, why) = ctx.th.ks_two(a.len(), b.len(), floor);
    ctx.push(SubTest::new(name, stat, Comparison::Below, thr, why));
    Ok(stat)
}

fn z_test(ctx: &mut Ctx, name: &str, xs: &[f64], target: f64) -> f64 {
    let (m, se) = mean_se(xs);
    let z = (m - target) / se;
    let zmax = ctx.th.z_max;
    ctx.push(SubTest::new(name, z, Comparison::AbsBelow, zmax, format!("(mean - {target}) / SE, |z| < {zmax}")));
    z
}

/// z statistic of a Bernoulli frequency against `p`.
fn frequency_test(ctx: &mut Ctx, name: &str, hits: usize, n: usize, p: f64) -> f64 {
    let freq = hits as f64 / n as f64;
    let z = (freq - p) / (p * (1.0 - p) / n as f64).sqrt();
    let zmax = ctx.th.z_max;
    ctx.push(SubTest::new(name, z, Comparison::AbsBelow, zmax, format!("(freq - {p}) / sqrt(p(1-p)/{n}), |z| < {zmax}")));
    z
}

fn pmf_json(pmf: &ExactPmf) -> Value {
    Value::Array(
        pmf.iter()
            .map(|(l, m)| json!({"l": l, "num": m.numer().to_string(), "den": m.denom().to_string()}))
            .collect(),
    )
}

/// Value at time `t` of a Brownian path known at the grid points: linear
/// interpolation plus the Brownian-bridge fluctuation of the enclosing cell.
pub fn interpolate_bridged(values: &[f64], duration: f64, t: f64, rng: &mut RngStream) -> f64 {
    let n = values.len() - 1;
    let dt = duration / n as f64;
    let x = (t / dt).clamp(0.0, n as f64);
    let i = (x.floor() as usize).min(n - 1);
    let f = x - i as f64;
    let mean = values[i] + f * (values[i + 1] - values[i]);
    let sd = (f * (1.0 - f) * dt).sqrt();
    mean + sd * rng.normal()
}

/// Probability that a Brownian path through `knots` stays above `line`,
/// when each cell is a bridge conditioned to stay above `floor` (evaluated at
/// the cell midpoint; `-inf` for a free bridge). Survival of a cell is
/// `(1 - exp(-2 d0 d1 / dt)) / (1 - exp(-2 a b / dt))` with `d` the distances
/// to the line and `a`, `b` the heights above the floor. A cell whose line lies
/// under the floor always survives; a line crossing the floor inside a cell
/// is treated as free.
pub fn line_survival(knots: &[(f64, f64)], line: impl Fn(f64) -> f64, floor: impl Fn(f64) -> f64) -> f64 {
    let mut p = 1.0;
    for w in knots.windows(2) {
        let ((t0, v0), (t1, v1)) = (w[0], w[1]);
        let dt = t1 - t0;
        if dt <= 0.0 {
            continue;
        }
        let (l0, l1, f) = (line(t0), line(t1), floor(0.5 * (t0 + t1)));
        if l0 <= f && l1 <= f {
            continue;
        }
        let (d0, d1) = (v0 - l0, v1 - l1);
        if d0 < 0.0 || d1 < 0.0 {
            return 0.0;
        }
        let free = -(-2.0 * d0 * d1 / dt).exp_m1();
        let cell = if f.is_finite() && l0 >= f && l1 >= f {
            let (a, b) = (v0 - f, v1 - f);
            let above = -(-2.0 * a * b / dt).exp_m1();
            if above > 0.0 {
                free / above
            } else if a > 0.0 {
                d0 / a
            } else if b > 0.0 {
                d1 / b
            } else {
                1.0
            }
        } else {
            free
        };
        p *= cell.clamp(0.0, 1.0);
    }
    p
}

/// One Bernoulli draw of the event measured by [`line_survival`].
pub fn crossing_survives(
    knots: &[(f64, f64)],
    line: impl Fn(f64) -> f64,
    floor: impl Fn(f64) -> f64,
    rng: &mut RngStream,
) -> bool {
    rng.uniform() < line_survival(knots, line, floor)
}

/// Continuous last-segment slope of the convex minorant of a path ending at
/// `(1, end)`, drawn from its law given the knots: `P(slope <= a)` is the
/// survival of the line through `(1, end)` with slope `a`.
fn bridged_last_slope(knots: &[(f64, f64)], end: f64, lo: f64, floor: impl Fn(f64) -> f64, rng: &mut RngStream) -> f64 {
    let surv = |a: f64| line_survival(knots, |t| end - a * (1.0 - t), &floor);
    let u = rng.uniform();
    if surv(lo) >= u {
        return lo;
    }
    let (mut a, mut b) = (lo, 0.0);
    for _ in 0..50 {
        let m = 0.5 * (a + b);
        if surv(m) >= u {
            b = m;
        } else {
            a = m;
        }
    }
    0.5 * (a + b)
}

fn knots(values: &[f64], duration: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let dt = duration / (values.len() - 1) as f64;
    values.iter().enumerate().map(move |(i, &v)| (i as f64 * dt, v))
}

fn discrete(ctx: &mut Ctx) -> Result<()> {
    const MAX_N: usize = 14;
    const QV_MAX_N: usize = 12;
    ctx.param("max_n", MAX_N);
    ctx.param("qv_max_n", QV_MAX_N);
    let mut cases = Vec::new();
    for n in 1..=MAX_N {
        for a in (-(n as i64)..0).filter(|a| (n as i64 + a) % 2 == 0) {
            cases.push((n, a));
        }
    }
    let (mut bij, mut pmf, mut fact, mut helper) = (true, true, true, true);
    for &(n, a) in &cases {
        let c = discrete_checks(n, a)?;
        bij &= c.bijection_ok;
        pmf &= c.pmf_matches_enumeration;
        fact &= c.factorization_ok;
        helper &= c.uniform_helper_ok;
        if (n, a) == (4, -2) {
            ctx.estimate("z_pmf_n4_a-2", pmf_json(&c.pmf));
        }
    }
    let mut qv = true;
    for n in 1..=QV_MAX_N {
        qv &= quantile_vervaat_multisets_equal(n)?;
    }
    ctx.estimate("cases", cases.len());
    let all = format!("all n <= {MAX_N}, admissible a < 0");
    ctx.push(SubTest::exact("bijection", bij, all.clone()));
    ctx.push(SubTest::exact("z_pmf_matches_enumeration", pmf, all.clone()));
    ctx.push(SubTest::exact("piece_laws_factorize", fact, all.clone()));
    ctx.push(SubTest::exact("helper_uniform", helper, all));
    ctx.push(SubTest::exact("quantile_vervaat_multisets", qv, format!("all n <= {QV_MAX_N}")));
    Ok(())
}

fn samplers(ctx: &mut Ctx) -> Result<()> {
    let (n, reps, seed) = (ctx.grid(), ctx.reps, ctx.seed);
    let lambda = -1.0;
    ctx.param("lambda", lambda);
    let floor = ctx.th.ks_floor_law;
    let h = n / 2;

    let bm = run_replicates(seed, &ctx.label("bm"), reps, |r| sample_bm::<f64>(n, r).values()[h]);
    z_test(ctx, "bm_var_half", &bm.iter().map(|x| x * x).collect::<Vec<_>>(), 0.5);

    let br = run_replicates(seed, &ctx.label("bridge"), reps, |r| sample_bridge::<f64>(lambda, 1.0, n, r).values()[h]);
    z_test(ctx, "bridge_mean_half", &br, lambda / 2.0);
    z_test(ctx, "bridge_var_half", &br.iter().map(|x| (x - lambda / 2.0).powi(2)).collect::<Vec<_>>(), 0.25);

    let q = n / 4;
    let ex = run_replicates(seed, &ctx.label("bes3-00"), reps, |r| sample_excursion::<f64>(1.0, n, r).values()[q]);
    let tq = q as f64 / n as f64;
    ks_one(ctx, "bes3_00_marginal_ks", &ex, |x| excursion_marginal_cdf(tq, x), floor)?;

    let b10 = run_replicates(seed, &ctx.label("bes3-10"), reps, |r| {
        crate::samplers::sample_bessel3_bridge::<f64>(1.0, 0.0, 1.0, n, r).values()[h]
    });
    let mean10 = integrate_to_infinity(|x| x * bes3_bridge_marginal(1.0, 0.0, 1.0, 0.5, x), 0.0)?;
    ctx.estimate("bes3_10_mean_half_quadrature", mean10);
    z_test(ctx, "bes3_10_mean_half", &b10, mean10);

    let route_a = run_replicates(seed, &ctx.label("excursion-vervaat"), reps, |r| sample_excursion_vervaat::<f64>(1.0, n, r).values()[h]);
    let route_b = run_replicates(seed, &ctx.label("excursion-bes3"), reps, |r| sample_excursion::<f64>(1.0, n, r).values()[h]);
    ks_two(ctx, "excursion_routes_ks_half", &route_a, &route_b, floor)?;

    let fpb = run_replicates(seed, &ctx.label("fpb"), reps, |r| {
        let p: P = sample_fpb(lambda, 1.0, n, r);
        let v = p.values();
        (v[h], v[..n].iter().all(|&x| x > lambda))
    });
    let mids: Vec<f64> = fpb.iter().map(|x| x.0).collect();
    ks_one(ctx, "fpb_marginal_ks_half", &mids, |x| bes3_bridge_cdf(lambda.abs(), 0.0, 1.0, 0.5, x - lambda).unwrap_or(f64::NAN), floor)?;
    ctx.push(SubTest::exact("fpb_min_only_at_end", fpb.iter().all(|x| x.1), "every grid value before the end exceeds lambda"));

    let me = run_replicates(seed, &ctx.label("meander"), reps, |r| sample_meander::<f64>(n, r).last());
    z_test(ctx, "meander_end_m2", &me.iter().map(|x| x * x).collect::<Vec<_>>(), 2.0);

    let den = run_replicates(seed, &ctx.label("denisov"), reps, |r| sample_meander_pair_denisov::<f64>(n, r).0.values()[h]);
    let dir = run_replicates(seed, &ctx.label("vb-direct"), reps, |r| sample_vervaat_bm_direct::<f64>(n, r).values()[h]);
    ks_two(ctx, "vb_routes_ks_half", &den, &dir, floor)?;

    let zs = run_replicates(seed, &ctx.label("decomposed-z"), reps, |r| sample_vervaat_bridge_decomposed::<f64>(lambda, n, r).1.z);
    ks_one(ctx, "decomposed_z_ks", &zs, |t| cdf_z(lambda, t), floor)?;

    let snapped = run_replicates(seed, &ctx.label("snapped"), reps, |r| sample_vervaat_bridge_snapped::<f64>(0.0, n, r).values()[h]);
    ctx.estimate("snapped_vs_refined_ks_half", ks_two_sample(&snapped, &route_a)?);
    Ok(())
}

fn decomposition(ctx: &mut Ctx) -> Result<()> {
    let (n, reps, seed) = (ctx.grid(), ctx.reps, ctx.seed);
    let lambda = -1.0;
    ctx.param("lambda", lambda);
    ctx.param("marginal_times", MARGINAL_TIMES);
    let floor = ctx.th.ks_floor_law;
    let idx: Vec<usize> = MARGINAL_TIMES.iter().map(|&t| index_of(t, n)).collect();

    // direct: [z, m1, m2, m3, piece-1 midpoint / sqrt(z), piece-2 midpoint PIT]
    let direct = run_replicates(seed, &ctx.label("direct"), reps, |r| {
        let rv = sample_vervaat_bridge_with_min::<f64>(lambda, n, r);
        let z = rv.first_return_bridged(0.0, r).unwrap_or(1.0);
        let v = rv.path.values();
        let f1 = interpolate_bridged(v, 1.0, z / 2.0, r) / z.sqrt();
        let len = 1.0 - z;
        let mid = interpolate_bridged(v, 1.0, z + len / 2.0, r) - lambda;
        let f2 = bes3_bridge_cdf(lambda.abs(), 0.0, len, len / 2.0, mid).unwrap_or(f64::NAN);
        vec![z, v[idx[0]], v[idx[1]], v[idx[2]], f1, f2]
    });
    let decomposed = run_replicates(seed, &ctx.label("decomposed"), reps, |r| {
        let (p, rec) = sample_vervaat_bridge_decomposed::<f64>(lambda, n, r);
        let v = p.values();
        vec![rec.z, v[idx[0]], v[idx[1]], v[idx[2]]]
    });

    let z = column(&direct, 0);
    ks_one(ctx, "first_return_ks", &z, |t| cdf_z(lambda, t), floor)?;
    for (k, t) in MARGINAL_TIMES.iter().enumerate() {
        ks_two(ctx, &format!("route_marginal_ks_t{t}"), &column(&direct, k + 1), &column(&decomposed, k + 1), floor)?;
    }

    // conditional independence of the pieces, within Z quintiles
    let mut sorted = z.clone();
    sorted.sort_by(f64::total_cmp);
    let edges: Vec<f64> = (0..=5).map(|k| quantile(&sorted, k as f64 / 5.0)).collect();
    for b in 0..5 {
        let rows: Vec<&Vec<f64>> = direct
            .iter()
            .filter(|r| r[0] >= edges[b] && (r[0] < edges[b + 1] || (b == 4 && r[0] <= edges[5])))
            .collect();
        let f1: Vec<f64> = rows.iter().map(|r| r[4]).collect();
        let f2: Vec<f64> = rows.iter().map(|r| r[5]).collect();
        let rho = correlation(&f1, &f2);
        let zf = fisher_z(rho, rows.len());
        let zmax = ctx.th.z_max;
        ctx.push(SubTest::new(
            format!("independence_bin{b}"),
            zf,
            Comparison::AbsBelow,
            zmax,
            format!("Fisher z of corr(piece-1 midpoint / sqrt(Z), piece-2 midpoint PIT) over {} paths", rows.len()),
        ));
    }

    let f1 = column(&direct, 4);
    ks_one(ctx, "excursion_piece_ks", &f1, |x| excursion_marginal_cdf(0.5, x), floor)?;
    let f2 = column(&direct, 5);
    ks_one(ctx, "passage_piece_pit_ks", &f2, |u| u.clamp(0.0, 1.0), floor)?;
    ks_one(ctx, "decomposed_z_ks", &column(&decomposed, 0), |t| cdf_z(lambda, t), floor)?;

    ctx.estimate("mean_z_direct", mean_se(&z).0);
    ctx.estimate("mean_z_exact", prob_above_drift(lambda)?);
    Ok(())
}

fn duality(ctx: &mut Ctx) -> Result<()> {
    let (n, reps, seed) = (ctx.grid(), ctx.reps, ctx.seed);
    let lambdas = [0.5, 1.0, 2.0];
    ctx.param("lambdas", lambdas);
    ctx.param("marginal_times", MARGINAL_TIMES);
    let floor = ctx.th.ks_floor_law;
    let idx: Vec<usize> = MARGINAL_TIMES.iter().map(|&t| index_of(t, n)).collect();
    for lambda in lambdas {
        let reversed = run_replicates(seed, &ctx.label(&format!("neg{lambda}")), reps, |r| {
            let rv = sample_vervaat_bridge_with_min::<f64>(-lambda, n, r);
            let d = dual_reverse(&rv.path, lambda);
            idx.iter().map(|&i| d.values()[i]).collect::<Vec<_>>()
        });
        let direct = run_replicates(seed, &ctx.label(&format!("pos{lambda}")), reps, |r| {
            let rv = sample_vervaat_bridge_with_min::<f64>(lambda, n, r);
            let mut row: Vec<f64> = idx.iter().map(|&i| rv.path.values()[i]).collect();
            row.push(rv.last_hit_bridged(lambda, r).unwrap_or(0.0));
            row
        });
        for (k, t) in MARGINAL_TIMES.iter().enumerate() {
            ks_two(ctx, &format!("lambda{lambda}_marginal_ks_t{t}"), &column(&reversed, k), &column(&direct, k), floor)?;
        }
        let hits = column(&direct, 3);
        ks_family(ctx, &format!("lambda{lambda}_last_hit_ks"), &hits, Family::Zhat { lambda }, floor)?;
    }
    Ok(())
}

fn vervaat_limit(ctx: &mut Ctx) -> Result<()> {
    let (n, reps, seed) = (ctx.grid(), ctx.reps, ctx.seed);
    ctx.param("marginal_times", MARGINAL_TIMES);
    let floor = ctx.th.ks_floor_law;
    let idx: Vec<usize> = MARGINAL_TIMES.iter().map(|&t| index_of(t, n)).collect();
    let pick = |p: P| idx.iter().map(|&i| p.values()[i]).collect::<Vec<_>>();
    let v = run_replicates(seed, &ctx.label("vervaat"), reps, |r| pick(sample_excursion_vervaat(1.0, n, r)));
    let b = run_replicates(seed, &ctx.label("bes3"), reps, |r| pick(sample_excursion(1.0, n, r)));
    for (k, &t) in MARGINAL_TIMES.iter().enumerate() {
        ks_two(ctx, &format!("marginal_ks_t{t}"), &column(&v, k), &column(&b, k), floor)?;
        ks_one(ctx, &format!("vervaat_vs_law_ks_t{t}"), &column(&v, k), |x| excursion_marginal_cdf(t, x), floor)?;
    }
    Ok(())
}

fn biane_shift(ctx: &mut Ctx) -> Result<()> {
    let (n, reps, seed) = (ctx.grid(), ctx.reps, ctx.seed);
    let lambda = -1.0;
    ctx.param("lambda", lambda);
    ctx.param("marginal_times", MARGINAL_TIMES);
    let floor = ctx.th.ks_floor_law;
    let idx: Vec<usize> = MARGINAL_TIMES.iter().map(|&t| index_of(t, n)).collect();
    let rows = run_replicates(seed, &ctx.label("shift"), reps, |r| {
        let rv = sample_vervaat_bridge_with_min::<f64>(lambda, n, r);
        let z = rv.first_return_bridged(0.0, r).unwrap_or(1.0);
        let a = r.uniform() * z;
        let k = rv.path.index_of(a);
        let s = shift_cyclic(&rv.path, a);
        let mut row: Vec<f64> = idx.iter().map(|&i| s.values()[i]).collect();
        row.push(if argmin_first(&s) == n - k { 1.0 } else { 0.0 });
        row
    });
    for (k, &t) in MARGINAL_TIMES.iter().enumerate() {
        let tt = idx[k] as f64 / n as f64;
        ks_one(ctx, &format!("bridge_marginal_ks_t{t}"), &column(&rows, k), |x| bridge_marginal_cdf(lambda, tt, x), floor)?;
    }
    let frac = column(&rows, 3).iter().sum::<f64>() / reps as f64;
    let thr = ctx.th.min_location_fraction;
    ctx.push(SubTest::new("min_location_fraction", frac, Comparison::AtLeast, thr, "share of shifted paths whose first argmin is the grid image of 1 - A"));

    // lambda = 0: uniform shift of an excursion is a bridge
    let rows0 = run_replicates(seed, &ctx.label("shift0"), reps, |r| {
        let e: P = sample_excursion(1.0, n, r);
        let s = shift_cyclic(&e, r.uniform());
        idx.iter().map(|&i| s.values()[i]).collect::<Vec<_>>()
    });
    for (k, &t) in MARGINAL_TIMES.iter().enumerate() {
        let tt = idx[k] as f64 / n as f64;
        ks_one(ctx, &format!("lambda0_bridge_marginal_ks_t{t}"), &column(&rows0, k), |x| bridge_marginal_cdf(0.0, tt, x), floor)?;
    }
    Ok(())
}

fn moments_vb(ctx: &mut Ctx) -> Result<()> {
    let (n, reps, seed) = (ctx.grid(), ctx.reps, ctx.seed);
    let times: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
    ctx.param("times", &times);
    let mut idx: Vec<usize> = times.iter().map(|&t| index_of(t, n)).collect();
    idx.push(n);
    let pick = |p: P| idx.iter().map(|&i| p.values()[i]).collect::<Vec<_>>();
    let denisov = run_replicates(seed, &ctx.label("denisov"), reps, |r| pick(sample_meander_pair_denisov(n, r).0));
    let direct = run_replicates(seed, &ctx.label("direct"), reps, |r| pick(sample_vervaat_bm_direct(n, r)));
    for (route, rows) in [("denisov", &denisov), ("direct", &direct)] {
        for (k, &i) in idx[..times.len()].iter().enumerate() {
            let t = i as f64 / n as f64;
            let x = column(rows, k);
            z_test(ctx, &format!("{route}_mean_t{}", times[k]), &x, mean_vb(t));
            z_test(ctx, &format!("{route}_m2_t{}", times[k]), &x.iter().map(|v| v * v).collect::<Vec<_>>(), second_moment_vb(t));
        }
        let end = column(rows, times.len());
        z_test(ctx, &format!("{route}_var_t1"), &end.iter().map(|v| v * v).collect::<Vec<_>>(), 1.0);
    }
    let floor = ctx.th.ks_floor_law;
    ks_two(ctx, "route_ks_t0.5", &column(&denisov, 4), &column(&direct, 4), floor)?;
    ctx.estimate("mean_vb_t0.5", mean_vb(0.5));
    Ok(())
}

fn meander_moments(ctx: &mut Ctx) -> Result<()> {
    let (n, reps, seed) = (ctx.grid(), ctx.reps, ctx.seed);
    ctx.param("times", MARGINAL_TIMES);
    let idx: Vec<usize> = MARGINAL_TIMES.iter().map(|&t| index_of(t, n)).collect();
    let rows = run_replicates(seed, &ctx.label("meander"), reps, |r| {
        let p: P = sample_meander(n, r);
        let mut row: Vec<f64> = idx.iter().map(|&i| p.values()[i]).collect();
        row.push(p.last());
        row
    });
    let end = column(&rows, 3);
    for (k, &t0) in MARGINAL_TIMES.iter().enumerate() {
        let t = idx[k] as f64 / n as f64;
        let x = column(&rows, k);
        z_test(ctx, &format!("mean_t{t0}"), &x, meander_mean(t));
        z_test(ctx, &format!("m2_t{t0}"), &x.iter().map(|v| v * v).collect::<Vec<_>>(), meander_m2(t));
        let cross: Vec<f64> = x.iter().zip(&end).map(|(a, b)| a * b).collect();
        z_test(ctx, &format!("cross_t{t0}"), &cross, meander_cross(t));
    }
    z_test(ctx, "mean_t1", &end, (PI / 2.0).sqrt());
    z_test(ctx, "m2_t1", &end.iter().map(|v| v * v).collect::<Vec<_>>(), 2.0);

    // quadrature of the marginal and joint densities against the moment formulas
    let tol = ctx.th.quadrature_tolerance;
    let mut worst: f64 = 0.0;
    for &t in &MARGINAL_TIMES {
        let m1 = integrate_to_infinity(|x| x * meander_marginal(t, x), 0.0)?;
        let m2 = integrate_to_infinity(|x| x * x * meander_marginal(t, x), 0.0)?;
        worst = worst.max((m1 - meander_mean(t)).abs()).max((m2 - meander_m2(t)).abs());
    }
    ctx.push(SubTest::new("quadrature_moments", worst, Comparison::Below, tol, "max |quadrature - formula| for mean and second moment"));
    let t = 0.5;
    let cross = integrate(
        |x| {
            let inner = integrate(|y| y * meander_joint(t, x, y), 0.0, x + 12.0).unwrap_or(f64::NAN);
            x * inner
        },
        0.0,
        12.0,
    )?;
    ctx.push(SubTest::new("quadrature_cross_t0.5", (cross - meander_cross(t)).abs(), Comparison::Below, 1e-6, "|double integral of the joint density - 2 sqrt(t)|"));
    Ok(())
}

fn above_drift(ctx: &mut Ctx) -> Result<()> {
    let (n, reps, seed) = (ctx.grid(), ctx.reps, ctx.seed);
    let lambda = -1.0;
    let pool = 3 * reps;
    ctx.param("lambda", lambda);
    ctx.param("pool", pool);
    let rows = run_replicates(seed, &ctx.label("pool"), pool, |r| {
        let rv = sample_vervaat_bridge_with_min::<f64>(lambda, n, r);
        let w = rv.wrap_time();
        let above = crossing_survives(&rv.knots(), |t| lambda * t, |t| if t < w { 0.0 } else { lambda }, r);
        let z = rv.first_return_bridged(0.0, r).unwrap_or(1.0);
        (above, z)
    });
    let p = prob_above_drift(lambda)?;
    let hits = rows[..reps].iter().filter(|x| x.0).count();
    ctx.estimate("frequency", hits as f64 / reps as f64);
    ctx.estimate("prob_above_drift", p);
    frequency_test(ctx, "frequency_vs_formula", hits, reps, p);

    let accepted: Vec<f64> = rows.iter().filter(|x| x.0).map(|x| x.1).collect();
    ctx.estimate("accepted", accepted.len());
    let floor = ctx.th.ks_floor_conditioned;
    ks_family(ctx, "conditioned_return_ks", &accepted, Family::ZConditioned { lambda }, floor)?;

    let chord_reps = (reps / 5).max(100);
    let x = lambda / 2.0;
    ctx.param("chord_x", x);
    ctx.param("chord_reps", chord_reps);
    let chord = run_replicates(seed, &ctx.label("chord"), chord_reps, |r| {
        let f: P = sample_fpb(lambda, 1.0, n, r);
        let v = f.values();
        let k: Vec<(f64, f64)> = knots(v, 1.0).collect();
        let above = crossing_survives(&k, |t| x - (x - lambda) * t, |_| lambda, r);
        (above, v[..n].iter().all(|&y| y > lambda))
    });
    let hits = chord.iter().filter(|c| c.0).count();
    frequency_test(ctx, "chord_frequency", hits, chord_reps, x / lambda);
    ctx.push(SubTest::exact("chord_at_endpoint", chord.iter().all(|c| c.1), "x = lambda: the bridge stays above lambda before the end"));
    Ok(())
}

fn drift_excursion(ctx: &mut Ctx) -> Result<()> {
    let (n, reps, seed) = (ctx.grid(), ctx.reps, ctx.seed);
    let lambda = -1.0;
    ctx.param("lambda", lambda);
    ctx.param("edge_cells", EDGE_CELLS);
    let rows = run_replicates(seed, &ctx.label("h"), reps, |r| {
        let p: P = sample_drifting_excursion(lambda, n, r);
        let v = p.values();
        let h = first_below(v, r);
        let mid = interpolate_bridged(v, 1.0, h / 2.0, r) / h.sqrt();
        (h, mid)
    });
    let h: Vec<f64> = rows.iter().map(|x| x.0).collect();
    let floor = ctx.th.ks_floor_law;
    ks_one(ctx, "h_law_ks", &h, |t| cdf_z(lambda, t), floor)?;
    let late: Vec<f64> = rows.iter().filter(|x| x.0 > 0.5).map(|x| x.1).collect();
    ctx.estimate("late_paths", late.len());
    if late.len() >= 100 {
        ks_one(ctx, "first_piece_excursion_ks", &late, |x| excursion_marginal_cdf(0.5, x), floor)?;
    }
    let (mh, se) = mean_se(&h);
    ctx.estimate("mean_h", mh);
    ctx.estimate("mean_h_se", se);
    ctx.estimate("mean_z", prob_above_drift(lambda)?);
    for eps in [0.01, 0.05] {
        let frac = h.iter().filter(|&&x| x < eps).count() as f64 / h.len() as f64;
        ctx.estimate(&format!("p_h_below_{eps}"), frac);
        ctx.estimate(&format!("p_z_below_{eps}"), cdf_z(lambda, eps));
    }
    Ok(())
}

/// First time the path goes below 0 after leaving it at time 0: grid sign
/// changes on the first `EDGE_CELLS` cells, bridged crossings afterwards.
fn first_below(v: &[f64], rng: &mut RngStream) -> f64 {
    let n = v.len() - 1;
    let dt = 1.0 / n as f64;
    for i in 1..=EDGE_CELLS.min(n) {
        if v[i] <= 0.0 {
            let f = if v[i - 1] > 0.0 { v[i - 1] / (v[i - 1] - v[i]) } else { 0.0 };
            return (i as f64 - 1.0 + f) * dt;
        }
    }
    first_hit_bridged(knots(v, 1.0).skip(EDGE_CELLS), 0.0, 1.0, rng).unwrap_or(1.0)
}

fn non_markov(ctx: &mut Ctx) -> Result<()> {
    let (n, reps, seed) = (ctx.grid(), ctx.reps, ctx.seed);

    // lattice: earlier visit of -1 versus positivity, same present
    for &(len, t0, x0, hit) in &[(16usize, 6usize, 2i64, 3usize), (20, 10, 2, 5)] {
        let a = -2;
        let hit_law = conditional_return_law(len, a, t0, x0, PastEvent::HitAt(hit))?;
        let pos_law = conditional_return_law(len, a, t0, x0, PastEvent::Positive)?;
        ctx.estimate(&format!("discrete_n{len}_after_hit"), pmf_json(&hit_law));
        ctx.estimate(&format!("discrete_n{len}_after_positive"), pmf_json(&pos_law));
        ctx.push(SubTest::exact(
            format!("discrete_n{len}_laws_differ"),
            hit_law != pos_law,
            format!("exact laws of the next visit to -1 after step {t0} given V = {x0}, a = {a}"),
        ));
    }

    // continuous: the two conditional laws of the first return after t0
    let (lambda, t0, x0): (f64, f64, f64) = (-1.0, 0.5, 1.0);
    ctx.param("lambda", lambda);
    ctx.param("t0", t0);
    ctx.param("x0", x0);
    let n1 = 2 * reps;
    let n2 = 20 * reps;
    ctx.param("hit_route_paths", n1);
    ctx.param("weighted_route_draws", n2);
    let len = 1.0 - t0;
    let after_hit = run_replicates(seed, &ctx.label("after-hit"), n1, |r| {
        let times: Vec<f64> = (0..=n).map(|i| len * i as f64 / n as f64).collect();
        let b = bes3_bridge_at(x0 + lambda.abs(), 0.0, len, &times, r);
        let k = times.iter().copied().zip(b.iter().map(|x| x + lambda));
        t0 + first_hit_bridged(k, 0.0, 1.0, r).unwrap_or(len)
    });
    let weighted = run_replicates(seed, &ctx.label("positive"), n2, |r| {
        let g = r.normal();
        let z = g * g / (lambda * lambda + g * g);
        if z <= t0 {
            return (z, 0.0);
        }
        (z, q_tilde(t0, 0.0, x0) * q_tilde(z - t0, x0, 0.0) / q_tilde(z, 0.0, 0.0))
    });
    const BINS: usize = 10;
    let mut sorted = after_hit.clone();
    sorted.sort_by(f64::total_cmp);
    let mut edges: Vec<f64> = (0..=BINS).map(|k| quantile(&sorted, k as f64 / BINS as f64)).collect();
    edges[0] = t0;
    edges[BINS] = 1.0;
    let bin = |t: f64| edges[1..BINS].partition_point(|&e| e <= t);
    let (mut c1, mut s1) = (vec![0.0; BINS], vec![0.0; BINS]);
    for &t in &after_hit {
        let b = bin(t);
        c1[b] += 1.0;
        s1[b] += t;
    }
    let (mut w2, mut ww2) = (vec![0.0; BINS], vec![0.0; BINS]);
    for &(z, w) in &weighted {
        if w > 0.0 {
            let b = bin(z);
            w2[b] += w;
            ww2[b] += w * w;
        }
    }
    let total_w: f64 = w2.iter().sum();
    let (mut xs, mut ys, mut ws) = (Vec::new(), Vec::new(), Vec::new());
    for b in 0..BINS {
        if c1[b] == 0.0 || w2[b] == 0.0 {
            continue;
        }
        let y = (w2[b] / total_w) / (c1[b] / n1 as f64);
        let rel_var = 1.0 / c1[b] + ww2[b] / (w2[b] * w2[b]);
        xs.push(s1[b] / c1[b]);
        ys.push(y);
        ws.push(1.0 / (y * y * rel_var));
    }
    let (c, r2) = fit_through_origin(&xs, &ys, &ws);
    let nm = nonmarkov_densities(lambda, t0, x0)?;
    ctx.estimate("ratio_slope", c);
    ctx.estimate("ratio_slope_exact", nm.ratio_constant());
    ctx.estimate("ratio_points", json!({"t": xs, "ratio": ys}));
    ctx.estimate("total_variation_exact", nm.total_variation()?);
    let r2_min = ctx.th.r2_min;
    ctx.push(SubTest::new("continuous_ratio_r2", r2, Comparison::Above, r2_min, format!("weighted fit of the density ratio to c t over {BINS} equal-probability bins")));
    let floor = ctx.th.ks_floor_law;
    ks_family(ctx, "after_hit_law_ks", &after_hit, Family::NonMarkov1 { lambda, t0, x0 }, floor)?;

    // terminal sign of V(B) after an early zero versus under positivity
    let q = n / 4;
    let h = n / 2;
    let signs = run_replicates(seed, &ctx.label("terminal"), reps, |r| {
        let p: P = sample_meander_pair_denisov(n, r).0;
        let v = p.values();
        let early_zero = v[1..=q].iter().any(|&x| x <= 0.0) && v[h] > 0.0;
        let positive = v[1..=h].iter().all(|&x| x > 0.0);
        (early_zero, positive, v[n] > 0.0)
    });
    let zero_n = signs.iter().filter(|s| s.0).count();
    let zero_pos_end = signs.iter().filter(|s| s.0 && s.2).count();
    let pos_n = signs.iter().filter(|s| s.1).count();
    let pos_pos_end = signs.iter().filter(|s| s.1 && s.2).count();
    ctx.estimate("early_zero_paths", zero_n);
    ctx.estimate("positive_paths", pos_n);
    ctx.push(SubTest::new("early_zero_terminal_positive_count", zero_pos_end as f64, Comparison::Equal, 0.0, "paths with a grid zero in (0, 1/4], V(1/2) > 0 and V(1) > 0"));
    let freq = pos_pos_end as f64 / pos_n.max(1) as f64;
    let thr = ctx.th.terminal_positive_min;
    ctx.push(SubTest::new("positive_terminal_frequency", freq, Comparison::AtLeast, thr, "P(V(1) > 0 | V > 0 on the grid of (0, 1/2])"));
    Ok(())
}

fn discrete_to_continuum(ctx: &mut Ctx) -> Result<()> {
    let lambda = -1.0;
    let sizes = [200usize, 800, 3200];
    ctx.param("lambda", lambda);
    ctx.param("n", sizes);
    let mut tvs = Vec::new();
    let mut normalized = true;
    for &n in &sizes {
        let a = nearest_with_parity(lambda * (n as f64).sqrt(), n);
        let pmf = z_pmf(n, a)?;
        normalized &= pmf.total() == num_rational::BigRational::from_integer(1.into());
        let lam = a as f64 / (n as f64).sqrt();
        let first = pmf.support().next().unwrap_or(1);
        let mut tv = 0.0;
        let mut covered = 0.0;
        let mut l = first.rem_euclid(2);
        if l == 0 {
            l = 2;
        }
        while l as usize <= n {
            let lo = ((l - 1) as f64 / n as f64).max(0.0);
            let hi = ((l + 1) as f64 / n as f64).min(1.0);
            let qm = cdf_z(lam, hi) - cdf_z(lam, lo);
            covered += qm;
            tv += (ratio_to_f64(&pmf.mass(l)) - qm).abs();
            l += 2;
        }
        tv = 0.5 * (tv + (1.0 - covered).max(0.0));
        ctx.estimate(&format!("tv_n{n}"), tv);
        ctx.estimate(&format!("lambda_n{n}"), a);
        tvs.push(tv);
    }
    let tv_max = ctx.th.tv_max;
    ctx.push(SubTest::new("tv_n3200", tvs[2], Comparison::Below, tv_max, "TV between the exact pmf and f_Z integrated over matching bins, lambda_n / sqrt(n)"));
    ctx.push(SubTest::exact("tv_decreasing", tvs.windows(2).all(|w| w[1] < w[0]), "TV decreases over n = 200, 800, 3200"));
    ctx.push(SubTest::exact("pmf_normalized", normalized, "exact pmf sums to 1"));
    Ok(())
}

fn minorant(ctx: &mut Ctx) -> Result<()> {
    let (n, reps, seed) = (ctx.grid(), ctx.reps, ctx.seed);
    let lambda = -1.0;
    ctx.param("lambda", lambda);
    let rows = run_replicates(seed, &ctx.label("slope"), reps, |r| {
        let rv = sample_vervaat_bridge_with_min::<f64>(lambda, n, r);
        let w = rv.wrap_time();
        let bridged = bridged_last_slope(&rv.knots(), lambda, lambda, |t| if t < w { 0.0 } else { lambda }, r);
        (last_segment_slope(&rv.path), bridged)
    });
    let in_range = rows.iter().all(|&(g, b)| (lambda..=0.0).contains(&g) && (lambda..=0.0).contains(&b));
    ctx.push(SubTest::exact("slope_in_range", in_range, "every last-segment slope, grid and continuous, lies in [lambda, 0]"));
    let cdf = |a: f64| {
        if a < lambda {
            0.0
        } else if a >= 0.0 {
            1.0
        } else {
            slope_last_segment_cdf(lambda, a).unwrap_or(f64::NAN)
        }
    };
    let left = |a: f64| if a <= lambda { 0.0 } else { cdf(a) };
    let slopes: Vec<f64> = rows.iter().map(|x| x.1).collect();
    let stat = ks_one_sample_mixed(&slopes, cdf, left)?;
    let (thr, why) = ctx.th.ks_one(slopes.len(), ctx.th.ks_floor_conditioned);
    ctx.push(SubTest::new("slope_ks", stat, Comparison::Below, thr, why));
    let grid_slopes: Vec<f64> = rows.iter().map(|x| x.0).collect();
    let atom = |xs: &[f64]| xs.iter().filter(|&&s| s == lambda).count() as f64 / reps as f64;
    ctx.estimate("slope_atom_frequency", atom(&slopes));
    ctx.estimate("slope_atom_frequency_grid", atom(&grid_slopes));
    ctx.estimate("slope_atom_exact", prob_above_drift(lambda)?);
    ctx.estimate("grid_slope_ks", ks_one_sample_mixed(&grid_slopes, cdf, left)?);

    let count_reps = (reps / 10).max(100);
    let grids = [2 * n, 4 * n];
    ctx.param("count_grids", grids);
    ctx.param("count_reps", count_reps);
    let mut stats = Vec::new();
    for g in grids {
        let counts = run_replicates(seed, &ctx.label(&format!("count{g}")), count_reps, |r| {
            let rv = sample_vervaat_bridge_with_min::<f64>(lambda, g, r);
            convex_minorant(&rv.path).n_segments()
        });
        let s = segment_count_stats(counts);
        ctx.estimate(&format!("segment_counts_n{g}"), &s);
        stats.push(s);
    }
    let shift = (stats[1].mean - stats[0].mean) / (stats[0].std_error.powi(2) + stats[1].std_error.powi(2)).sqrt();
    let k = ctx.th.count_shift_se;
    ctx.push(SubTest::new("segment_count_shift", shift, Comparison::AbsBelow, k, format!("mean count shift between N = {} and {} in combined SE", grids[0], grids[1])));
    Ok(())
}
