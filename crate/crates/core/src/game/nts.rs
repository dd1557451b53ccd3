use crate::oracle::{binomial_f64, OracleError};

use super::GameError;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
/// Erdős–Borwein constant, `Σ 1/(2^k − 1)`.
pub const ERDOS_BORWEIN: f64 = 1.606_695_152_415_291_7;

/// `N_w` as a float.
pub fn n_w_f64(n: usize, w: usize) -> Result<f64, GameError> {
    if n == 0 || w == 0 || w > n {
        return Err(OracleError::InvalidCutoff { n, w }.into());
    }
    Ok((1..=w).map(|j| binomial_f64(n, j)).sum())
}

/// Round score: 1 for a hit, `−p_r/(1−p_r) = −1/(N_w−1)` for a miss.
pub fn score_round(correct: bool, n_w: f64) -> Result<f64, GameError> {
    if n_w < 2.0 {
        return Err(GameError::DegenerateScore);
    }
    Ok(if correct { 1.0 } else { -1.0 / (n_w - 1.0) })
}

/// `(N_w−1)/N_w · Σ h_i Q_i / (Σ h_i p_i − 1)` with `h_i = C(n, i)`.
/// `None` when the denominator is not positive.
pub fn nts_closed_form(n: usize, w: usize, q: &[f64], p: &[f64]) -> Result<Option<f64>, GameError> {
    let n_w = n_w_f64(n, w)?;
    if q.len() != w || p.len() != w {
        return Err(GameError::ClassCount {
            expected: w,
            q: q.len(),
            p: p.len(),
        });
    }
    if n_w < 2.0 {
        return Err(GameError::DegenerateScore);
    }
    let (mut hq, mut hp) = (0.0, 0.0);
    for i in 1..=w {
        let h = binomial_f64(n, i);
        hq += h * q[i - 1];
        hp += h * p[i - 1];
    }
    let denom = hp - 1.0;
    if denom <= 0.0 {
        return Ok(None);
    }
    Ok(Some((n_w - 1.0) / n_w * hq / denom))
}

/// Per-class means and the variances of those means, as fed to the
/// closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassMoments {
    pub q: f64,
    pub p: f64,
    pub var_q: f64,
    pub var_p: f64,
    pub cov_qp: f64,
}

/// Closed form together with its delta-method standard error.
pub fn nts_closed_form_se(
    n: usize,
    w: usize,
    classes: &[ClassMoments],
) -> Result<Option<(f64, f64)>, GameError> {
    let q: Vec<f64> = classes.iter().map(|c| c.q).collect();
    let p: Vec<f64> = classes.iter().map(|c| c.p).collect();
    let Some(value) = nts_closed_form(n, w, &q, &p)? else {
        return Ok(None);
    };
    let n_w = n_w_f64(n, w)?;
    let c = (n_w - 1.0) / n_w;
    let h: Vec<f64> = (1..=w).map(|i| binomial_f64(n, i)).collect();
    let a: f64 = h.iter().zip(&q).map(|(h, q)| h * q).sum();
    let d: f64 = h.iter().zip(&p).map(|(h, p)| h * p).sum::<f64>() - 1.0;
    let mut var = 0.0;
    for (hi, m) in h.iter().zip(classes) {
        let gq = c * hi / d;
        let gp = -c * a * hi / (d * d);
        var += gq * gq * m.var_q + gp * gp * m.var_p + 2.0 * gq * gp * m.cov_qp;
    }
    Ok(Some((value, var.max(0.0).sqrt())))
}

/// Smallest `k >= 1` with `k(k−1)/2 >= N_w − 1`, i.e.
/// `⌈√(2N_w − 7/4) + 1/2⌉` without rounding error.
pub fn k_min(n_w: u128) -> u128 {
    if n_w <= 1 {
        return 1;
    }
    let need = n_w - 1;
    let mut k = ((2.0 * n_w as f64).sqrt() as u128).max(1);
    while k > 1 && (k - 1) * (k - 2) / 2 >= need {
        k -= 1;
    }
    while k * (k - 1) / 2 < need {
        k += 1;
    }
    k
}

/// Lower bound on the NTS of any classical player.
pub fn nts_c_lower_bound(n_w: u128) -> f64 {
    if n_w <= 1 {
        return 0.0;
    }
    let k = k_min(n_w) as f64;
    k - k * (k - 1.0) * (k - 2.0) / (6.0 * n_w as f64)
}

/// Float form for `N_w` past `u128`.
pub fn nts_c_lower_bound_f64(n_w: f64) -> f64 {
    if n_w < u128::MAX as f64 {
        return nts_c_lower_bound(n_w.round() as u128);
    }
    let k = ((2.0 * n_w - 1.75).sqrt() + 0.5).ceil();
    k - k * (k - 1.0) * (k - 2.0) / (6.0 * n_w)
}

/// Interpolated ideal-quantum NTS between the unrestricted full-rank value and
/// the small-`t` regime, `t = N_w/(2^n − 1)`.
pub fn nts_iq_interpolation(n: usize, w: usize) -> Result<f64, GameError> {
    let n_w = n_w_f64(n, w)?;
    let t = n_w / (2f64.powi(n as i32) - 1.0);
    Ok(n_w.log2() + (0.5 + EULER_GAMMA / std::f64::consts::LN_2) * (1.0 - t) + (ERDOS_BORWEIN - 1.0) * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores() {
        assert_eq!(score_round(true, 7.0).unwrap(), 1.0);
        assert!((score_round(false, 7.0).unwrap() + 1.0 / 6.0).abs() < 1e-15);
        assert!((score_round(false, 6.0).unwrap() + 0.2).abs() < 1e-15);
        assert!(score_round(true, 1.0).is_err());
    }

    #[test]
    fn closed_form_examples() {
        assert!((nts_closed_form(2, 2, &[2.0, 2.0], &[1.0, 1.0]).unwrap().unwrap() - 2.0).abs() < 1e-12);
        // Σ h p = 1.
        assert_eq!(nts_closed_form(2, 2, &[2.0, 2.0], &[1.0 / 3.0, 1.0 / 3.0]).unwrap(), None);
        let q = 3.7;
        let n = 5;
        let got = nts_closed_form(n, 1, &[q], &[1.0]).unwrap().unwrap();
        let expect = (n as f64 - 1.0) / n as f64 * n as f64 * q / (n as f64 - 1.0);
        assert!((got - expect).abs() < 1e-12);
        assert!(nts_closed_form(3, 2, &[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn k_min_matches_ceiling_formula() {
        for n_w in 1u128..5000 {
            let f = ((2.0 * n_w as f64 - 1.75).sqrt() + 0.5).ceil() as u128;
            assert_eq!(k_min(n_w), f.max(1), "N_w = {n_w}");
        }
        assert_eq!(k_min(7), 4);
        assert_eq!(k_min(30), 9);
    }

    #[test]
    fn classical_bound_values() {
        assert_eq!(nts_c_lower_bound(1), 0.0);
        assert!((nts_c_lower_bound(2) - 2.0).abs() < 1e-12);
        assert!((nts_c_lower_bound(7) - (4.0 - 24.0 / 42.0)).abs() < 1e-12);
        assert!((nts_c_lower_bound(30) - 6.2).abs() < 1e-12);
        let big = nts_c_lower_bound_f64(2f64.powi(65) - 1.0);
        assert!(big > 2f64.powf(32.0));
    }

    #[test]
    fn iq_values() {
        assert!((nts_iq_interpolation(3, 3).unwrap() - (7f64.log2() + ERDOS_BORWEIN - 1.0)).abs() < 1e-12);
        assert!((nts_iq_interpolation(3, 3).unwrap() - 3.414_04).abs() < 1e-4);
        assert!((nts_iq_interpolation(1, 1).unwrap() - 0.606_69).abs() < 1e-5);
        let small_t = 0.5 + EULER_GAMMA / std::f64::consts::LN_2;
        assert!((small_t - 1.332_75).abs() < 1e-5);
    }

    #[test]
    fn se_is_zero_without_variance() {
        let m = ClassMoments {
            q: 2.0,
            p: 1.0,
            var_q: 0.0,
            var_p: 0.0,
            cov_qp: 0.0,
        };
        let (v, se) = nts_closed_form_se(2, 2, &[m, m]).unwrap().unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert_eq!(se, 0.0);
    }
}
