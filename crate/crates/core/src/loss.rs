//! Jensen–Shannon divergence between cell pmfs, summed per record.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::pdb::{Pmf, Record, Schema};

/// Lower clamp for probabilities inside logarithms.
pub const PROB_FLOOR: f64 = 1e-12;

/// JSD in nats of two equal-length probability slices. `0 · ln(0 / x)` is 0.
pub fn jsd_slices(p: &[f64], q: &[f64]) -> f64 {
    debug_assert_eq!(p.len(), q.len());
    let mut total = 0.0;
    for (&pk, &qk) in p.iter().zip(q) {
        let r = ((pk + qk) / 2.0).max(PROB_FLOOR);
        if pk > 0.0 {
            total += 0.5 * pk * (pk.max(PROB_FLOOR) / r).ln();
        }
        if qk > 0.0 {
            total += 0.5 * qk * (qk.max(PROB_FLOOR) / r).ln();
        }
    }
    total.max(0.0)
}

/// `∂ JSD(p ‖ q) / ∂ q(k) = ½ ln(q(k) / r(k))`, written into `out`.
pub fn jsd_grad_q(p: &[f64], q: &[f64], out: &mut [f64]) {
    for ((&pk, &qk), o) in p.iter().zip(q).zip(out.iter_mut()) {
        let r = ((pk + qk) / 2.0).max(PROB_FLOOR);
        *o = 0.5 * (qk.max(PROB_FLOOR) / r).ln();
    }
}

pub fn jsd(p: &Pmf, q: &Pmf) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
            context: "jsd operands".into(),
        });
    }
    Ok(jsd_slices(p.probs(), q.probs()).min(LN_2))
}

/// Sum of per-attribute JSDs; attributes flagged in `skip` contribute nothing.
pub fn record_loss(x: &Record, y: &Record, schema: &Schema, skip: Option<&[bool]>) -> Result<f64> {
    x.validate(schema)?;
    y.validate(schema)?;
    if let Some(s) = skip {
        if s.len() != schema.len() {
            return Err(Error::DimensionMismatch {
                expected: schema.len(),
                actual: s.len(),
                context: "loss mask".into(),
            });
        }
    }
    let mut total = 0.0;
    for (j, (p, q)) in x.cells.iter().zip(&y.cells).enumerate() {
        if skip.is_some_and(|s| s[j]) {
            continue;
        }
        total += jsd(p, q)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdb::AttributeSpec;

    fn pmf(v: &[f64]) -> Pmf {
        Pmf::new(v.to_vec()).unwrap()
    }

    #[test]
    fn known_values() {
        let p = pmf(&[0.2, 0.3, 0.5]);
        assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        assert!((jsd(&pmf(&[1.0, 0.0]), &pmf(&[0.0, 1.0])).unwrap() - LN_2).abs() < 1e-12);
        // r = (0.75, 0.25): ½ ln(4/3) + ½ (½ ln(2/3) + ½ ln 2)
        let expected = 0.5 * (1.0f64 / 0.75).ln() + 0.5 * (0.5 * (0.5f64 / 0.75).ln() + 0.5 * 2f64.ln());
        let got = jsd(&pmf(&[1.0, 0.0]), &pmf(&[0.5, 0.5])).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.2158).abs() < 1e-4);
    }

    #[test]
    fn length_mismatch() {
        assert!(jsd(&pmf(&[1.0, 0.0]), &pmf(&[0.2, 0.3, 0.5])).is_err());
    }

    #[test]
    fn record_sums_and_masks() {
        let schema = Schema::new(vec![
            AttributeSpec::categorical_indexed("a", 2).unwrap(),
            AttributeSpec::categorical_indexed("b", 2).unwrap(),
        ])
        .unwrap();
        let x = Record::new(vec![pmf(&[1.0, 0.0]), pmf(&[0.0, 1.0])]);
        let y = Record::new(vec![pmf(&[0.0, 1.0]), pmf(&[1.0, 0.0])]);
        assert_eq!(record_loss(&x, &x, &schema, None).unwrap(), 0.0);
        assert!((record_loss(&x, &y, &schema, None).unwrap() - 2.0 * LN_2).abs() < 1e-12);
        assert!((record_loss(&x, &y, &schema, Some(&[false, true])).unwrap() - LN_2).abs() < 1e-12);
        assert!(record_loss(&x, &y, &schema, Some(&[false])).is_err());
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let p = [0.1, 0.6, 0.3];
        let q = [0.25, 0.25, 0.5];
        let mut g = [0.0; 3];
        jsd_grad_q(&p, &q, &mut g);
        for k in 0..3 {
            let h = 1e-6;
            let mut up = q;
            let mut down = q;
            up[k] += h;
            down[k] -= h;
            let fd = (jsd_slices(&p, &up) - jsd_slices(&p, &down)) / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-8, "k={k}: {fd} vs {}", g[k]);
        }
    }
}
