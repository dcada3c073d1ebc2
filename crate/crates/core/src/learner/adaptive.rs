use crate::error::{check_len, HdError, Result};
use crate::hdc::ClassModel;
use crate::matrix::Matrix;

use super::inference::argmax;

/// One pass of similarity-weighted adaptive learning.
///
/// Samples are visited in `order` (dataset order when `None`). A correctly
/// predicted sample leaves the model untouched. Otherwise, with `i` the
/// predicted and `j` the true class and both similarities taken before the
/// update:
///
/// ```text
/// C_i <- C_i - eta * (1 - δ(H, C_i)) * H
/// C_j <- C_j + eta * (1 - δ(H, C_j)) * H
/// ```
///
/// Returns the number of samples that triggered an update.
pub fn adaptive_fit_epoch(
    model: &mut ClassModel,
    encoded: &Matrix,
    labels: &[usize],
    eta: f64,
    order: Option<&[usize]>,
) -> Result<usize> {
    check_len("adaptive_fit_epoch labels", encoded.rows(), labels.len())?;
    if encoded.rows() > 0 {
        check_len("adaptive_fit_epoch dim", model.dim(), encoded.cols())?;
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(HdError::invalid(format!("learning rate must be positive, got {eta}")));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= model.num_classes()) {
        return Err(HdError::invalid(format!(
            "label {bad} out of range for {} classes",
            model.num_classes()
        )));
    }
    if let Some(order) = order {
        check_len("adaptive_fit_epoch order", encoded.rows(), order.len())?;
        if order.iter().any(|&i| i >= encoded.rows()) {
            return Err(HdError::invalid("sample order index out of range"));
        }
    }

    let mut scores = vec![0.0; model.num_classes()];
    let mut updates = 0;
    let n = encoded.rows();
    for step in 0..n {
        let s = order.map_or(step, |o| o[step]);
        let h = encoded.row(s);
        let truth = labels[s];
        model.scores_into(h, &mut scores);
        let predicted = argmax(&scores);
        if predicted == truth {
            continue;
        }
        model.add_scaled(predicted, -eta * (1.0 - scores[predicted]), h);
        model.add_scaled(truth, eta * (1.0 - scores[truth]), h);
        updates += 1;
    }
    Ok(updates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::inference::predict_all;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn hand_traced_update() {
        let mut m = ClassModel::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let h = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        adaptive_fit_epoch(&mut m, &h, &[1], 1.0, None).unwrap();
        assert_eq!(m.class(0), &[1.0, 0.0]);
        assert_eq!(m.class(1), &[1.0, 1.0]);
        assert!(m.norms_consistent(1e-12));
    }

    #[test]
    fn correct_sample_is_a_no_op() {
        let mut m = ClassModel::from_rows(&[[1.0, 0.2], [0.1, 1.0]]).unwrap();
        let before = m.clone();
        let h = Matrix::from_rows(&[[2.0, 0.1], [0.0, 3.0]]).unwrap();
        assert_eq!(adaptive_fit_epoch(&mut m, &h, &[0, 1], 0.5, None).unwrap(), 0);
        assert_eq!(m, before);
    }

    #[test]
    fn parallel_wrong_class_is_not_pushed_away() {
        // H parallel to the wrong class: (1 - δ) = 0 kills the subtraction.
        let mut m = ClassModel::from_rows(&[[2.0, 0.0], [0.0, 1.0]]).unwrap();
        let h = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        adaptive_fit_epoch(&mut m, &h, &[1], 0.3, None).unwrap();
        assert_eq!(m.class(0), &[2.0, 0.0]);
    }

    #[test]
    fn rejects_bad_labels_and_rates() {
        let mut m = ClassModel::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let h = Matrix::from_rows(&[[1.0, 0.0]]).unwrap();
        assert!(adaptive_fit_epoch(&mut m, &h, &[2], 1.0, None).is_err());
        assert!(adaptive_fit_epoch(&mut m, &h, &[1], 0.0, None).is_err());
        assert!(adaptive_fit_epoch(&mut m, &h, &[1, 0], 1.0, None).is_err());
    }

    #[test]
    fn updates_touch_at_most_two_classes_and_keep_norms() {
        let mut r = rng::stream(8, "test");
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..12).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let mut m = ClassModel::from_rows(&rows).unwrap();
        for _ in 0..40 {
            let h: Vec<f64> = (0..12).map(|_| r.random_range(-1.0..1.0)).collect();
            let label = r.random_range(0..5);
            let before = m.clone();
            let one = Matrix::from_rows(&[h]).unwrap();
            adaptive_fit_epoch(&mut m, &one, &[label], 0.1, None).unwrap();
            let changed = (0..5).filter(|&l| m.class(l) != before.class(l)).count();
            assert!(changed == 0 || changed == 2);
            assert!(m.norms_consistent(1e-9));
        }
    }

    #[test]
    fn perfect_model_stays_bit_identical() {
        let mut r = rng::stream(9, "test");
        let rows: Vec<Vec<f64>> = (0..3).map(|_| (0..20).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let m0 = ClassModel::from_rows(&rows).unwrap();
        let samples: Vec<Vec<f64>> = (0..30)
            .map(|_| (0..20).map(|_| r.random_range(-1.0..1.0)).collect())
            .collect();
        let enc = Matrix::from_rows(&samples).unwrap();
        // Label every sample with the model's own prediction.
        let labels = predict_all(&m0, &enc).unwrap();
        let mut m = m0.clone();
        adaptive_fit_epoch(&mut m, &enc, &labels, 0.05, None).unwrap();
        assert_eq!(m, m0);
    }
}
