use crate::textrep::SparseVector;

/// `a·b / (‖a‖‖b‖)`, or 0 when either vector has zero norm.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "cosine of vectors with different lengths");
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

pub fn sparse_cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (a.dot(b) / (na * nb)).clamp(-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_values() {
        assert!((cosine_similarity(&[1.0, 2.0], &[1.0, 2.0]) - 1.0).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]), 0.0);
        assert!((cosine_similarity(&[1.0, 2.0], &[2.0, 1.0]) - 0.8).abs() < 1e-15);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[2.0, 1.0]), 0.0);
    }

    #[test]
    fn sparse_agrees_with_dense() {
        let a = SparseVector::from_pairs(4, vec![(0, 1.0), (3, 2.0)]);
        let b = SparseVector::from_pairs(4, vec![(3, 1.0), (1, 5.0)]);
        let d = cosine_similarity(&a.to_dense(), &b.to_dense());
        assert!((sparse_cosine(&a, &b) - d).abs() < 1e-15);
    }
}
