//! Learning-to-learn: feature maps `h` evaluated over a meta-sample, scored
//! per task by the best average loss in a finite loss class.

use super::FunctionClass;
use crate::error::{Error, Result};
use crate::lipschitz::LipschitzLoss;
use crate::numeric::distance;

fn maps_of(class: &FunctionClass) -> Result<(&super::MetaSample, &[nalgebra::DMatrix<f64>])> {
    class
        .feature_maps()
        .ok_or_else(|| Error::Unsupported(format!("{} class has no feature maps", class.kind_name())))
}

/// `ψ_t(h) = min_f (1/n) Σ_i f(h(x_i^t))` for map `h` and task `t`.
pub fn ltl_psi(class: &FunctionClass, h: usize, t: usize, loss_class: &[LipschitzLoss]) -> Result<f64> {
    let (meta, maps) = maps_of(class)?;
    if loss_class.is_empty() {
        return Err(Error::EmptyClass);
    }
    if h >= maps.len() || t >= meta.tasks() {
        return Err(Error::Domain(format!(
            "map {h} / task {t} out of range ({} maps, {} tasks)",
            maps.len(),
            meta.tasks()
        )));
    }
    if let Some(f) = loss_class.iter().find(|f| !f.accepts(class.output_dim())) {
        return Err(Error::mismatch("loss input", class.output_dim(), f));
    }
    let n = meta.per_task();
    let map = &maps[h];
    let mut u = vec![0.0; class.output_dim()];
    let mut best = f64::INFINITY;
    for f in loss_class {
        let mut total = 0.0;
        for i in 0..n {
            u.iter_mut().zip(map.row(t * n + i).iter()).for_each(|(a, b)| *a = *b);
            let v = f.value(&u);
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("loss {f} takes value {v} outside [0, 1]")));
            }
            total += v;
        }
        best = best.min(total / n as f64);
    }
    Ok(best)
}

/// `[φ_t(h)]_{k,i} = h_k(x_i^t)`, flattened with index `k*n + i`.
pub fn ltl_phi(class: &FunctionClass, h: usize, t: usize) -> Result<Vec<f64>> {
    let (meta, maps) = maps_of(class)?;
    let n = meta.per_task();
    let map = maps.get(h).ok_or_else(|| Error::Domain(format!("map {h} out of range")))?;
    if t >= meta.tasks() {
        return Err(Error::Domain(format!("task {t} out of range")));
    }
    Ok((0..class.output_dim())
        .flat_map(|k| (0..n).map(move |i| map[(t * n + i, k)]))
        .collect())
}

/// Margins `ψ_t(h) - ψ_t(h') - (L/√n)‖φ_t(h) - φ_t(h')‖` over all ordered
/// pairs of maps and all tasks, `L` the largest constant in the loss class.
pub fn ltl_lipschitz_margins(class: &FunctionClass, loss_class: &[LipschitzLoss]) -> Result<Vec<f64>> {
    let (meta, maps) = maps_of(class)?;
    let l = loss_class.iter().map(|f| f.lipschitz()).fold(0.0, f64::max);
    let scale = l / (meta.per_task() as f64).sqrt();
    let mut out = Vec::new();
    for t in 0..meta.tasks() {
        let psi = (0..maps.len())
            .map(|h| ltl_psi(class, h, t, loss_class))
            .collect::<Result<Vec<_>>>()?;
        let phi = (0..maps.len()).map(|h| ltl_phi(class, h, t)).collect::<Result<Vec<_>>>()?;
        for a in 0..maps.len() {
            for b in 0..maps.len() {
                out.push(psi[a] - psi[b] - scale * distance(&phi[a], &phi[b]));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classes::MetaSample;
    use nalgebra::DMatrix;

    fn class(maps: Vec<DMatrix<f64>>) -> FunctionClass {
        FunctionClass::from_feature_maps(MetaSample::abstract_points(2, 2).unwrap(), maps).unwrap()
    }

    #[test]
    fn psi_examples() {
        let c = class(vec![DMatrix::from_element(4, 2, 0.4)]);
        assert_eq!(ltl_psi(&c, 0, 0, &[LipschitzLoss::constant(0.0)]).unwrap(), 0.0);
        let consts = [LipschitzLoss::constant(0.3), LipschitzLoss::constant(0.7)];
        assert_eq!(ltl_psi(&c, 0, 1, &consts).unwrap(), 0.3);
        let zero = class(vec![DMatrix::zeros(4, 2)]);
        let f = LipschitzLoss::euclidean_norm().clamped_unit();
        assert_eq!(ltl_psi(&zero, 0, 0, &[f]).unwrap(), 0.0);
        assert!(matches!(ltl_psi(&c, 0, 0, &[]), Err(Error::EmptyClass)));
        assert!(ltl_psi(&c, 0, 0, &[LipschitzLoss::constant(2.0)]).is_err());
    }

    #[test]
    fn lipschitz_property_holds() {
        let maps = vec![
            DMatrix::from_row_slice(4, 2, &[0.1, 0.9, 0.4, 0.2, 0.0, 0.5, 0.8, 0.3]),
            DMatrix::from_row_slice(4, 2, &[0.7, 0.1, 0.3, 0.3, 0.6, 0.6, 0.2, 0.0]),
            DMatrix::zeros(4, 2),
        ];
        let losses = [
            LipschitzLoss::max_coordinate().clamped_unit(),
            LipschitzLoss::distance_to(vec![0.5, 0.5]).clamped_unit(),
        ];
        let margins = ltl_lipschitz_margins(&class(maps), &losses).unwrap();
        assert_eq!(margins.len(), 2 * 9);
        assert!(margins.iter().all(|&m| m <= 1e-12));
    }
}
