use crate::error::{Error, Result};

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub total: f64,
    pub positive_term: f64,
    pub negative_terms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripletGrads {
    pub reference: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

fn check_dims(r_ref: &[f64], r_pos: &[f64], negs: &[Vec<f64>]) -> Result<()> {
    let d = r_ref.len();
    if r_pos.len() != d || negs.iter().any(|n| n.len() != d) {
        return Err(Error::ContractViolation(format!(
            "triplet representations must all have dimension {d}"
        )));
    }
    Ok(())
}

/// `softplus(-<ref, pos>) + sum_k softplus(<ref, neg_k>)`, which equals
/// `-log σ(<ref, pos>) - sum_k log σ(-<ref, neg_k>)`.
pub fn triplet_loss(r_ref: &[f64], r_pos: &[f64], negs: &[Vec<f64>]) -> Result<LossValue> {
    check_dims(r_ref, r_pos, negs)?;
    let positive_term = softplus(-dot(r_ref, r_pos));
    let negative_terms: Vec<f64> = negs.iter().map(|n| softplus(dot(r_ref, n))).collect();
    Ok(LossValue {
        total: positive_term + negative_terms.iter().sum::<f64>(),
        positive_term,
        negative_terms,
    })
}

pub fn triplet_loss_grad(r_ref: &[f64], r_pos: &[f64], negs: &[Vec<f64>]) -> Result<TripletGrads> {
    check_dims(r_ref, r_pos, negs)?;
    let a = -sigmoid(-dot(r_ref, r_pos));
    let mut reference: Vec<f64> = r_pos.iter().map(|p| a * p).collect();
    let positive = r_ref.iter().map(|r| a * r).collect();
    let negatives = negs
        .iter()
        .map(|n| {
            let s = sigmoid(dot(r_ref, n));
            for (g, x) in reference.iter_mut().zip(n) {
                *g += s * x;
            }
            r_ref.iter().map(|r| s * r).collect()
        })
        .collect();
    Ok(TripletGrads {
        reference,
        positive,
        negatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn zero_dots() {
        let l = triplet_loss(&[0.0, 0.0], &[1.0, 1.0], &[vec![2.0, -1.0]]).unwrap();
        assert!(close(l.total, 2.0 * std::f64::consts::LN_2, 1e-12));
    }

    #[test]
    fn direct_evaluation() {
        // <ref,pos> = 2, <ref,neg> = -1
        let l = triplet_loss(&[1.0, 0.0], &[2.0, 0.0], &[vec![-1.0, 5.0]]).unwrap();
        let pos = (1.0 + (-2.0f64).exp()).ln();
        let neg = (1.0 + (-1.0f64).exp()).ln();
        assert!(close(l.positive_term, pos, 1e-15));
        assert!(close(l.negative_terms[0], neg, 1e-15));
        assert!(close(l.total, 0.440190, 1e-6));
    }

    #[test]
    fn limit_is_zero() {
        let l = triplet_loss(&[1e4], &[1e4], &[vec![-1e4], vec![-1e4]]).unwrap();
        assert_eq!(l.total, 0.0);
        let big = triplet_loss(&[1e3], &[-1e3], &[vec![1e3]]).unwrap();
        assert!(big.total.is_finite() && close(big.total, 2e6, 1e-6));
    }

    #[test]
    fn gradient_example() {
        let g = triplet_loss_grad(&[1.0, 0.0], &[1.0, 0.0], &[vec![0.0, 1.0]]).unwrap();
        assert!(close(g.reference[0], -0.268941, 1e-6));
        assert!(close(g.reference[1], 0.5, 1e-12));
    }

    #[test]
    fn zero_vectors_zero_gradients() {
        let g = triplet_loss_grad(&[0.0; 3], &[0.0; 3], &[vec![0.0; 3]]).unwrap();
        assert!(g.reference.iter().chain(&g.positive).chain(&g.negatives[0]).all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            triplet_loss(&[0.0; 3], &[0.0; 2], &[]),
            Err(Error::ContractViolation(_))
        ));
        assert!(matches!(
            triplet_loss_grad(&[0.0; 3], &[0.0; 3], &[vec![0.0; 4]]),
            Err(Error::ContractViolation(_))
        ));
    }

    fn vecs(n: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-3.0f64..3.0, d), n)
    }

    proptest! {
        #[test]
        fn terms_positive_and_total_consistent(v in vecs(5, 6)) {
            let negs = v[2..].to_vec();
            let l = triplet_loss(&v[0], &v[1], &negs).unwrap();
            prop_assert!(l.positive_term > 0.0);
            prop_assert!(l.negative_terms.iter().all(|&t| t > 0.0));
            let sum = l.positive_term + l.negative_terms.iter().sum::<f64>();
            prop_assert!((l.total - sum).abs() <= 1e-12 * sum.max(1.0));
        }

        #[test]
        fn finite_for_huge_dots(a in -1e3f64..1e3, b in -1e3f64..1e3) {
            let l = triplet_loss(&[a], &[b], &[vec![b]]).unwrap();
            prop_assert!(l.total.is_finite() && l.total >= 0.0);
        }

        #[test]
        fn swapping_negatives_keeps_total(v in vecs(4, 5)) {
            let negs = vec![v[2].clone(), v[3].clone()];
            let swapped = vec![v[3].clone(), v[2].clone()];
            let a = triplet_loss(&v[0], &v[1], &negs).unwrap().total;
            let b = triplet_loss(&v[0], &v[1], &swapped).unwrap().total;
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }

        #[test]
        fn gradients_match_central_differences(v in vecs(4, 160)) {
            let (r, p, negs) = (&v[0], &v[1], v[2..].to_vec());
            let g = triplet_loss_grad(r, p, &negs).unwrap();
            let h = 1e-6;
            let f = |r: &[f64], p: &[f64], n: &[Vec<f64>]| triplet_loss(r, p, n).unwrap().total;
            for i in (0..160).step_by(7) {
                let (mut rp, mut rm) = (r.clone(), r.clone());
                rp[i] += h;
                rm[i] -= h;
                let fd = (f(&rp, p, &negs) - f(&rm, p, &negs)) / (2.0 * h);
                prop_assert!((fd - g.reference[i]).abs() <= 1e-6 * g.reference[i].abs().max(1.0));
                let (mut pp, mut pm) = (p.clone(), p.clone());
                pp[i] += h;
                pm[i] -= h;
                let fd = (f(r, &pp, &negs) - f(r, &pm, &negs)) / (2.0 * h);
                prop_assert!((fd - g.positive[i]).abs() <= 1e-6 * g.positive[i].abs().max(1.0));
                let mut np = negs.clone();
                let mut nm = negs.clone();
                np[1][i] += h;
                nm[1][i] -= h;
                let fd = (f(r, p, &np) - f(r, p, &nm)) / (2.0 * h);
                prop_assert!((fd - g.negatives[1][i]).abs() <= 1e-6 * g.negatives[1][i].abs().max(1.0));
            }
        }
    }
}
