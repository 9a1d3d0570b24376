//! Scalar skeleton of the convex exhaustion: the bump function and its
//! derivative bound `L`, the constants `m`, `β`, step sizes
//! `ε_R = β R^{1+ε} e^{-kR}`, the radius recursion `r_{n+1} = r_n + ε_{r_n}`
//! and the angle budget it consumes.
//!
//! For realistic `r0` the steps underflow (`e^{-kr}` with `r` in the
//! thousands), so the recursion is advanced in certified blocks: on a block
//! `[lo, lo + h)` every step is at least `min(ε(lo), ε(lo + h))` because
//! `ln ε` is concave, which bounds the number of steps spent there and the
//! viewing angles they add. Step counts are kept in log space.

use serde::Serialize;

use crate::error::{Error, Result};

/// Quintic smoothstep moved to `[1/2, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BumpFunction {
    /// Common bound for `|φ'|` and `|φ''|`.
    pub l: f64,
    pub max_d1: f64,
    pub max_d2: f64,
}

impl BumpFunction {
    pub fn eval(&self, rho: f64) -> f64 {
        let x = (2.0 * rho - 1.0).clamp(0.0, 1.0);
        x * x * x * (x * (6.0 * x - 15.0) + 10.0)
    }

    pub fn d1(&self, rho: f64) -> f64 {
        let x = 2.0 * rho - 1.0;
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        2.0 * 30.0 * x * x * (1.0 - x) * (1.0 - x)
    }

    pub fn d2(&self, rho: f64) -> f64 {
        let x = 2.0 * rho - 1.0;
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        4.0 * 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
    }

    /// Largest `|φ'|`, `|φ''|` on an `n`-point grid of `[1/2, 1]`.
    pub fn grid_maxima(&self, n: usize) -> (f64, f64) {
        (0..n).fold((0.0f64, 0.0f64), |(a, b), i| {
            let rho = 0.5 + 0.5 * i as f64 / (n - 1) as f64;
            (a.max(self.d1(rho).abs()), b.max(self.d2(rho).abs()))
        })
    }
}

pub fn build_bump() -> BumpFunction {
    // 2 · 30 (1/2)^4 and 4 · 10/√3
    let max_d1: f64 = 3.75;
    let max_d2 = 40.0 / 3f64.sqrt();
    BumpFunction {
        l: max_d1.max(max_d2),
        max_d1,
        max_d2,
    }
}

/// `max_{R ≥ 1} e^{-kR} R^{1+ε}`.
pub fn compute_m(k: f64, eps: f64) -> f64 {
    let r = ((1.0 + eps) / k).max(1.0);
    (-k * r).exp() * r.powf(1.0 + eps)
}

pub fn compute_beta(k: f64, l: f64, eps: f64) -> f64 {
    let m = compute_m(k, eps);
    k / (2.0 * l * (m * (k + 1.0) + 1.0 / (0.5 * k).tanh()))
}

pub fn epsilon_step(beta: f64, k: f64, eps: f64, r: f64) -> f64 {
    beta * r.powf(1.0 + eps) * (-k * r).exp()
}

fn ln_epsilon(beta: f64, k: f64, eps: f64, r: f64) -> f64 {
    beta.ln() + (1.0 + eps) * r.ln() - k * r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HessianBound {
    pub lower_bound: f64,
    pub pass: bool,
}

/// The chain `k(1 − ε_R L) − ε_R L a_R coth(k/2) − ε_R L ≥ k/2`.
pub fn hessian_certificate(
    k: f64,
    l: f64,
    eps: f64,
    beta: f64,
    r: f64,
    a_r: f64,
) -> Result<HessianBound> {
    let a_max = (k * r - (1.0 + eps) * r.ln()).exp();
    if !(a_r >= k) || a_r > a_max * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "a_R = {a_r} must lie in [k, e^(kR)/R^(1+eps)] = [{k}, {a_max}]"
        )));
    }
    let el = epsilon_step(beta, k, eps, r) * l;
    let lower_bound = k * (1.0 - el) - el * a_r / (0.5 * k).tanh() - el;
    Ok(HessianBound {
        lower_bound,
        pass: lower_bound >= 0.5 * k - 1e-12,
    })
}

/// Validity threshold `r̃` of the viewing-angle bound.
pub fn r_tilde(k: f64) -> f64 {
    let a = (2.0 * k.sinh() / 3f64.sqrt()).asinh() / k;
    let b = 2f64.ln() / (2.0 * k);
    a.max(b)
}

/// `C_ang = 8 sinh k`.
pub fn c_ang(k: f64) -> f64 {
    8.0 * k.sinh()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ViewingAngle {
    pub theta: f64,
    pub bound_ratio: f64,
    pub bound_exp: f64,
    pub holds: bool,
}

/// `θ_R = arcsin(sinh k / sinh kR)` with its two upper bounds.
pub fn theta_r(k: f64, r: f64) -> Result<ViewingAngle> {
    let rt = r_tilde(k);
    if !(r >= rt) {
        return Err(Error::Domain(format!("R = {r} is below the validity threshold {rt}")));
    }
    let x = k.sinh() / (k * r).sinh();
    let theta = x.asin();
    let bound_ratio = 2.0 * x;
    let bound_exp = c_ang(k) * (-k * r).exp();
    Ok(ViewingAngle {
        theta,
        bound_ratio,
        bound_exp,
        holds: theta <= bound_ratio && theta <= bound_exp,
    })
}

/// `Σ_{n≥0} (x0 + n)^{-(1+ε)}` with the first `terms` summed exactly and the
/// rest bounded by `(x0 + terms − 1)^{-ε}/ε`.
fn power_tail(x0: f64, eps: f64, terms: usize) -> f64 {
    let mut s = 0.0;
    for n in (0..terms).rev() {
        s += (x0 + n as f64).powf(-(1.0 + eps));
    }
    s + (x0 + terms as f64 - 1.0).powf(-eps) / eps
}

const BUCKET_TERMS: usize = 1000;

/// `(C_ang e^k/β) Σ_{n≥0} (r0 + n)^{-(1+ε)}`.
pub fn bucket_budget(k: f64, eps: f64, beta: f64, r0: f64) -> f64 {
    c_ang(k) * k.exp() / beta * power_tail(r0, eps, BUCKET_TERMS)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Step {
    pub n: u64,
    pub r: f64,
    pub epsilon: f64,
    pub theta_bound: f64,
    pub partial_budget: f64,
}

/// A fast-forwarded stretch `[lo, hi)` of the recursion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Block {
    pub lo: f64,
    pub hi: f64,
    /// Upper bound for the number of steps taken in the block.
    pub log10_steps: f64,
    /// Upper bound for the viewing angles they add.
    pub theta_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExhaustionSchedule {
    pub k: f64,
    pub eps: f64,
    pub alpha: f64,
    pub r0: f64,
    pub r_stop: f64,
    pub l: f64,
    pub m: f64,
    pub beta: f64,
    pub c_ang: f64,
    pub r_tilde: f64,
    pub steps: Vec<Step>,
    pub blocks: Vec<Block>,
    /// `log10` of an upper bound on the total number of steps.
    pub log10_step_count: f64,
    /// Lower bound for the radius at which the run stopped.
    pub final_r: f64,
    pub reached_stop: bool,
    /// The literal recursion used its whole budget.
    pub max_steps_hit: bool,
    pub direct_sum: f64,
    pub direct_tail: f64,
    pub angle_budget: f64,
    pub bucket_budget: f64,
    pub converged_r0: bool,
}

/// Width of a fast-forward block, in units of `1/k`.
const BLOCK_WIDTH: f64 = 0.25;

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub fn run_schedule(
    k: f64,
    eps: f64,
    alpha: f64,
    r0: f64,
    max_steps: u64,
    r_stop: f64,
) -> Result<ExhaustionSchedule> {
    if !(k > 0.0 && eps > 0.0) {
        return Err(Error::Domain(format!("need k > 0 and eps > 0, got k={k}, eps={eps}")));
    }
    let rt = r_tilde(k);
    if !(r0 >= rt) {
        return Err(Error::Domain(format!("r0 = {r0} is below the validity threshold {rt}")));
    }
    let bump = build_bump();
    let l = bump.l;
    let m = compute_m(k, eps);
    let beta = compute_beta(k, l, eps);
    let c = c_ang(k);

    let mut steps = Vec::new();
    let mut r = r0;
    let mut n: u64 = 0;
    let mut direct = 0.0;
    while r < r_stop && n < max_steps {
        let e = epsilon_step(beta, k, eps, r);
        if !(r + e > r) {
            break;
        }
        let theta = c * (-k * r).exp();
        direct += theta;
        steps.push(Step {
            n,
            r,
            epsilon: e,
            theta_bound: theta,
            partial_budget: direct,
        });
        r += e;
        n += 1;
    }
    let max_steps_hit = n >= max_steps && r < r_stop;

    let mut ln_count = if n > 0 { (n as f64).ln() } else { f64::NEG_INFINITY };
    let mut blocks = Vec::new();
    let h = BLOCK_WIDTH / k;
    let mut lo = r;
    while lo < r_stop {
        let hi = lo + h;
        let ln_min = ln_epsilon(beta, k, eps, lo).min(ln_epsilon(beta, k, eps, hi));
        // at most floor(h/ε_min) + 1 steps have their radius in [lo, hi)
        let ln_steps = log_add(h.ln() - ln_min, 0.0);
        let theta = (ln_steps + c.ln() - k * lo).exp();
        direct += theta;
        ln_count = log_add(ln_count, ln_steps);
        blocks.push(Block {
            lo,
            hi,
            log10_steps: ln_steps / std::f64::consts::LN_10,
            theta_bound: theta,
        });
        lo = hi;
    }
    let final_r = lo;

    // remaining steps, bucketed by unit intervals past final_r
    let direct_tail = c * k.exp() / beta * (power_tail(final_r, eps, BUCKET_TERMS) - final_r.powf(-(1.0 + eps)))
        + c * (-k * final_r).exp() / (1.0 - (-k).exp());
    let bucket = bucket_budget(k, eps, beta, r0);
    Ok(ExhaustionSchedule {
        k,
        eps,
        alpha,
        r0,
        r_stop,
        l,
        m,
        beta,
        c_ang: c,
        r_tilde: rt,
        steps,
        blocks,
        log10_step_count: ln_count / std::f64::consts::LN_10,
        final_r,
        reached_stop: final_r >= r_stop,
        max_steps_hit,
        direct_sum: direct,
        direct_tail,
        angle_budget: direct + direct_tail,
        bucket_budget: bucket,
        converged_r0: bucket <= alpha,
    })
}

impl ExhaustionSchedule {
    /// Number of literal recursion radii in each unit bucket `[r0 + j, r0 + j + 1)`.
    pub fn bucket_counts(&self) -> Vec<u64> {
        let mut counts = Vec::new();
        for s in &self.steps {
            let j = (s.r - self.r0).floor() as usize;
            if counts.len() <= j {
                counts.resize(j + 1, 0);
            }
            counts[j] += 1;
        }
        counts
    }

    /// The bound `e^{k(r0+j+1)} / (β (r0+j)^{1+ε})` on bucket `j`.
    pub fn bucket_count_bound(&self, j: usize) -> f64 {
        let x = self.r0 + j as f64;
        (self.k * (x + 1.0)).exp() / (self.beta * x.powf(1.0 + self.eps))
    }
}

/// Smallest grid point `r_tilde + j/2` (not below `max(1, (1+ε)/k)`) whose
/// bucket budget is at most `alpha`.
pub fn choose_r0(k: f64, eps: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Domain(format!("alpha must lie in (0, π/2), got {alpha}")));
    }
    if !(k > 0.0 && eps > 0.0) {
        return Err(Error::Domain(format!("need k > 0 and eps > 0, got k={k}, eps={eps}")));
    }
    const CAP: u64 = 1 << 40;
    let beta = compute_beta(k, build_bump().l, eps);
    let rt = r_tilde(k);
    let floor = 1f64.max((1.0 + eps) / k);
    let j0 = if rt >= floor {
        0
    } else {
        ((floor - rt) / 0.5).ceil() as u64
    };
    let at = |j: u64| rt + 0.5 * j as f64;
    let ok = |j: u64| bucket_budget(k, eps, beta, at(j)) <= alpha;
    if ok(j0) {
        return Ok(at(j0));
    }
    let mut lo = j0;
    let mut hi = j0 + 1;
    while !ok(hi) {
        lo = hi;
        hi = j0 + 2 * (hi - j0);
        if hi > CAP {
            return Err(Error::Search(format!(
                "no r0 below {} meets the angle budget {alpha}",
                at(CAP)
            )));
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(at(hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn bump_shape() {
        let b = build_bump();
        assert_eq!(b.eval(0.5), 0.0);
        assert_eq!(b.eval(1.0), 1.0);
        assert_eq!(b.eval(0.2), 0.0);
        assert_eq!(b.eval(3.0), 1.0);
        assert_abs_diff_eq!(b.max_d1, 3.75);
        assert_abs_diff_eq!(b.max_d2, 23.094_010_767_585_03, epsilon = 1e-12);
        let (g1, g2) = b.grid_maxima(10_000);
        assert!(g1 <= b.l && g2 <= b.l);
        assert!(b.max_d2 - g2 < 1e-5 && b.max_d1 - g1 < 1e-6);
    }

    #[test]
    fn m_examples() {
        assert_abs_diff_eq!(compute_m(1.0, 1.0), 4.0 * (-2f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(compute_m(3.0, 0.5), (-3f64).exp(), epsilon = 1e-15);
        assert!(compute_m(200.0, 1.0) < 1e-80);
    }

    #[test]
    fn beta_examples() {
        let l = build_bump().l;
        assert_abs_diff_eq!(compute_beta(1.0, l, 1.0), 0.006_668, epsilon = 1e-6);
        assert_abs_diff_eq!(compute_beta(1.0, 1.0, 1.0), 0.154_0, epsilon = 1e-4);
        assert_abs_diff_eq!(
            compute_beta(1.3, 2.0 * l, 0.7),
            compute_beta(1.3, l, 0.7) / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn epsilon_examples() {
        assert_abs_diff_eq!(epsilon_step(0.0067, 1.0, 1.0, 5.0), 1.128e-3, epsilon = 1e-6);
        assert_eq!(epsilon_step(0.0, 1.0, 1.0, 5.0), 0.0);
    }

    #[test]
    fn hessian_examples() {
        let l = build_bump().l;
        let beta = compute_beta(1.0, l, 1.0);
        let a = 1f64.exp().powi(2) / 4.0;
        let hb = hessian_certificate(1.0, l, 1.0, beta, 2.0, a).unwrap();
        assert!(hb.pass && hb.lower_bound >= 0.5);
        let far = hessian_certificate(1.0, l, 1.0, beta, 40.0, 1.0).unwrap();
        assert!((far.lower_bound - 1.0).abs() < 1e-10);
        assert!(hessian_certificate(1.0, l, 1.0, beta, 2.0, 0.5).is_err());
        assert!(hessian_certificate(1.0, l, 1.0, beta, 2.0, 2.0 * a).is_err());
    }

    #[test]
    fn viewing_angle_examples() {
        let v = theta_r(1.0, 5.0).unwrap();
        assert_abs_diff_eq!(v.theta, 0.015_838_267_903_462, epsilon = 1e-14);
        assert!(v.holds);
        assert_abs_diff_eq!(v.bound_ratio, 0.031_675_211_476_512, epsilon = 1e-14);
        assert_abs_diff_eq!(v.bound_exp, 0.063_347_546_848_271, epsilon = 1e-14);
        assert!(theta_r(1.0, 0.5).is_err());
    }

    #[test]
    fn schedule_reaches_stop() {
        let s = run_schedule(1.0, 1.0, FRAC_PI_4, 10.0, 10_000_000, 20.0).unwrap();
        assert!(s.reached_stop);
        assert!(s.log10_step_count.is_finite() && s.log10_step_count > 5.0);
        assert!(s.angle_budget <= s.bucket_budget);
        assert!(s.steps.windows(2).all(|w| w[1].r > w[0].r && w[1].epsilon < w[0].epsilon));
    }

    #[test]
    fn bucket_counts_respect_bound() {
        let s = run_schedule(1.0, 1.0, FRAC_PI_4, 3.0, 50_000_000, 12.0).unwrap();
        assert!(s.blocks.is_empty());
        for (j, &c) in s.bucket_counts().iter().enumerate() {
            assert!((c as f64) <= s.bucket_count_bound(j), "bucket {j}");
        }
    }

    #[test]
    fn empty_schedule_is_tail_only() {
        let s = run_schedule(1.0, 1.0, FRAC_PI_4, 10.0, 100, 10.0).unwrap();
        assert!(s.steps.is_empty() && s.blocks.is_empty());
        assert_eq!(s.direct_sum, 0.0);
        assert_eq!(s.angle_budget, s.direct_tail);
        assert!(s.angle_budget <= s.bucket_budget);
    }

    #[test]
    fn chosen_r0_meets_budget() {
        let r0 = choose_r0(1.0, 1.0, FRAC_PI_4).unwrap();
        let s = run_schedule(1.0, 1.0, FRAC_PI_4, r0, 1_000_000, r0 + 10.0).unwrap();
        assert!(s.reached_stop);
        assert!(s.angle_budget <= s.bucket_budget && s.bucket_budget <= FRAC_PI_4);
        let beta = s.beta;
        assert!(bucket_budget(1.0, 1.0, beta, r0 - 0.5) > FRAC_PI_4);
        assert!(choose_r0(1.0, 1.0, FRAC_PI_4 / 2.0).unwrap() >= r0);
    }
}
