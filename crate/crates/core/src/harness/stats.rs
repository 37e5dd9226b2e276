use std::collections::BTreeMap;

use super::{Outcome, TrialResult};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub center_m: f64,
    pub rate: f64,
    pub count: usize,
}

/// Success rate per Euclidean-distance bin. Bins are `[k w, (k+1) w)`;
/// empty bins are omitted. Only `Reached` counts as success.
pub fn success_rate_by_distance(results: &[TrialResult], bin_width_m: f64) -> Result<Vec<CurvePoint>> {
    if !(bin_width_m > 0.0) {
        return Err(Error::param("bin_width_m", "must be positive"));
    }
    let mut bins: BTreeMap<u64, (usize, usize)> = BTreeMap::new();
    for r in results {
        let k = (r.euclid_m / bin_width_m).floor().max(0.0) as u64;
        let e = bins.entry(k).or_default();
        e.1 += 1;
        if r.outcome == Outcome::Reached {
            e.0 += 1;
        }
    }
    Ok(bins
        .into_iter()
        .map(|(k, (ok, n))| CurvePoint {
            center_m: (k as f64 + 0.5) * bin_width_m,
            rate: ok as f64 / n as f64,
            count: n,
        })
        .collect())
}

/// Largest bin centre up to which every bin meets `target_rate`; zero when
/// the first bin already falls short.
pub fn range_at_success(curve: &[CurvePoint], target_rate: f64) -> Result<f64> {
    if !(target_rate > 0.0 && target_rate <= 1.0) {
        return Err(Error::param("target_rate", "must be in (0, 1]"));
    }
    Ok(curve
        .iter()
        .take_while(|p| p.rate >= target_rate)
        .last()
        .map_or(0.0, |p| p.center_m))
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.into_iter().fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Mean path length at which trials were declared lost.
pub fn average_lost_distance(results: &[TrialResult]) -> Result<f64> {
    mean(
        results
            .iter()
            .filter(|r| r.outcome == Outcome::Lost)
            .map(|r| r.manhattan_m),
    )
    .ok_or(Error::NoData("no lost trials"))
}

/// Mean path length over trials that ended lost or ran into the distance
/// cap. Capped trials contribute the cap, so the value is a lower bound on
/// the mean lost distance that stays comparable when some trials never
/// get lost.
pub fn restricted_mean_range(results: &[TrialResult]) -> Result<f64> {
    mean(
        results
            .iter()
            .filter(|r| matches!(r.outcome, Outcome::Lost | Outcome::Timeout))
            .map(|r| r.manhattan_m),
    )
    .ok_or(Error::NoData("no lost or capped trials"))
}

/// Fraction of trials that drove at least `distance_m` before they ended.
/// A trial that stopped early for any reason does not count as surviving.
pub fn survival_fraction(results: &[TrialResult], distance_m: f64) -> Result<f64> {
    if results.is_empty() {
        return Err(Error::NoData("no trials"));
    }
    let alive = results.iter().filter(|r| r.manhattan_m >= distance_m).count();
    Ok(alive as f64 / results.len() as f64)
}

/// Relative extra path length of `a` over `b` on trials with the same seed
/// that both reached their goal.
pub fn distance_overhead(a: &[TrialResult], b: &[TrialResult]) -> Result<f64> {
    let by_seed: BTreeMap<u64, &TrialResult> = b
        .iter()
        .filter(|r| r.outcome == Outcome::Reached)
        .map(|r| (r.seed, r))
        .collect();
    let (mut sum_a, mut sum_b, mut n) = (0.0, 0.0, 0usize);
    for ra in a.iter().filter(|r| r.outcome == Outcome::Reached) {
        if let Some(rb) = by_seed.get(&ra.seed) {
            sum_a += ra.manhattan_m;
            sum_b += rb.manhattan_m;
            n += 1;
        }
    }
    if n == 0 || sum_b <= 0.0 {
        return Err(Error::NoData("no matched successful pairs"));
    }
    Ok((sum_a - sum_b) / sum_b)
}

/// 1-based ranks, ties sharing their average rank.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let rank = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::NoData("need two equally long samples of length >= 2"));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::NoData("constant sample"));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Two-sided confidence interval for a Spearman coefficient using the
/// Fisher transform with the Fieller variance `1.06 / (n - 3)`.
pub fn spearman_interval(rho: f64, n: usize, z_crit: f64) -> Result<(f64, f64)> {
    if n < 4 {
        return Err(Error::NoData("need at least four samples"));
    }
    let z = rho.clamp(-0.999_999, 0.999_999).atanh();
    let se = (1.06 / (n as f64 - 3.0)).sqrt();
    Ok(((z - z_crit * se).tanh(), (z + z_crit * se).tanh()))
}
