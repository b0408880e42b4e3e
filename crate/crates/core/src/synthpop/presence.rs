//! Closed-form integrals of exponentially decaying presence.

use crate::intervals::Interval;

/// `(1 - e^{-gamma delta}) / gamma`: the decayed mass of a window fully occupied.
pub fn saturated_window(gamma: f64, delta: f64) -> f64 {
    -(-gamma * delta).exp_m1() / gamma
}

/// `∫_{t-δ}^{t} 1[τ ∈ visit] e^{-γ(t-τ)} dτ`.
pub fn presence_integral(visit: Interval, t: f64, delta: f64, gamma: f64) -> f64 {
    let lo = visit.0.max(t - delta);
    let hi = visit.1.min(t);
    if hi <= lo {
        return 0.0;
    }
    // e^{-γ(t-hi)} (1 - e^{-γ(hi-lo)}) / γ
    (-gamma * (t - hi)).exp() * -(-gamma * (hi - lo)).exp_m1() / gamma
}

/// `∫_{p}^{q} e^{-γ(t - anchor)} dt` for `t >= anchor` over the range.
fn decay_mass(p: f64, q: f64, anchor: f64, gamma: f64) -> f64 {
    (-gamma * (p - anchor)).exp() * -(-gamma * (q - p)).exp_m1() / gamma
}

/// Double integral
/// `∫_{outer ∩ [t0,tf]} ∫_{t'-δ}^{t'} 1[τ ∈ inner] e^{-γ(t'-τ)} dτ dt'`,
/// evaluated piecewise between the kinks at the inner endpoints and their
/// δ-shifts.
pub fn pair_kernel(outer: Interval, inner: Interval, window: Interval, delta: f64, gamma: f64) -> f64 {
    let p = outer.0.max(window.0);
    let q = outer.1.min(window.1);
    let (c, d) = inner;
    if q <= p || d <= c || c >= q || d + delta <= p {
        return 0.0;
    }
    let mut cuts = [p, c, d, c + delta, d + delta, q];
    cuts.sort_by(f64::total_cmp);
    let decay_floor = (-gamma * delta).exp();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (s, e) = (w[0].max(p), w[1].min(q));
        if e <= s {
            continue;
        }
        let m = 0.5 * (s + e);
        let upper_is_now = m < d;
        let lower_is_lagged = m - delta > c;
        let upper = if upper_is_now { m } else { d };
        let lower = if lower_is_lagged { m - delta } else { c };
        if upper <= lower {
            continue;
        }
        let upper_term = if upper_is_now {
            e - s
        } else {
            decay_mass(s, e, d, gamma)
        };
        let lower_term = if lower_is_lagged {
            decay_floor * (e - s)
        } else {
            decay_mass(s, e, c, gamma)
        };
        total += (upper_term - lower_term) / gamma;
    }
    total.max(0.0)
}

/// `∫_{window} 1[t' ∈ a ∩ b] dt'`: plain co-presence time.
pub fn overlap_length(a: Interval, b: Interval, window: Interval) -> f64 {
    let lo = a.0.max(b.0).max(window.0);
    let hi = a.1.min(b.1).min(window.1);
    (hi - lo).max(0.0)
}
