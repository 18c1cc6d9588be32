use crate::error::Result;
use crate::grid::{gradient, ScalarField};

/// `a(u, v, w) = ∫ u ∇v·(∇w)^⊥` with discrete gradients and trapezoid weights.
pub fn trilinear_a(u: &ScalarField, v: &ScalarField, w: &ScalarField) -> Result<f64> {
    u.same_grid(v)?;
    u.same_grid(w)?;
    let g = *u.grid();
    let dv = gradient(v);
    let dw = gradient(w);
    // ∇v·(∇w)^⊥ = v_x w_y − v_y w_x
    Ok((0..g.node_count())
        .map(|k| {
            let (i, j) = g.coords(k);
            g.weight(i, j) * u.values()[k] * (dv.x()[k] * dw.y()[k] - dv.y()[k] * dw.x()[k])
        })
        .sum())
}

/// `½ (a(u, v, w) − a(v, u, w))`, antisymmetric in `(u, v)` by construction.
pub fn trilinear_a_skew(u: &ScalarField, v: &ScalarField, w: &ScalarField) -> Result<f64> {
    Ok(0.5 * (trilinear_a(u, v, w)? - trilinear_a(v, u, w)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{h1_seminorm, linf_norm, Grid};

    #[test]
    fn constant_weight_vanishes_pointwise() {
        let g = Grid::new(1.3, 0.7, 9, 11).unwrap();
        let v = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() + x * y * y);
        let one = ScalarField::constant(g, 1.0);
        assert_eq!(trilinear_a(&one, &v, &v).unwrap(), 0.0);
    }

    #[test]
    fn skew_form_properties() {
        let g = Grid::unit_square(10).unwrap();
        let u = ScalarField::from_fn(g, |x, y| x * x - y);
        let v = ScalarField::from_fn(g, |x, y| (x + y).cos());
        let w = ScalarField::from_fn(g, |x, y| x * y * y);
        assert_eq!(trilinear_a_skew(&u, &u, &w).unwrap(), 0.0);
        assert_eq!(
            trilinear_a_skew(&u, &v, &w).unwrap(),
            -trilinear_a_skew(&v, &u, &w).unwrap()
        );
    }

    #[test]
    fn disjoint_supports_match_raw_definition() {
        let g = Grid::unit_square(12).unwrap();
        let u = ScalarField::from_fn(g, |x, _| if x < 0.3 { (x * 10.0).sin() } else { 0.0 });
        let v = ScalarField::from_fn(g, |x, y| if x > 0.7 { y * (1.0 - x) } else { 0.0 });
        let w = ScalarField::from_fn(g, |x, y| x * x + 2.0 * y);
        let raw = 0.5 * (trilinear_a(&u, &v, &w).unwrap() - trilinear_a(&v, &u, &w).unwrap());
        assert_eq!(trilinear_a_skew(&u, &v, &w).unwrap(), raw);
    }

    #[test]
    fn bounded_by_sup_and_energy_norms() {
        let g = Grid::unit_square(14).unwrap();
        let u = ScalarField::from_fn(g, |x, y| (5.0 * x * y).sin());
        let v = ScalarField::from_fn(g, |x, y| x * (1.0 - x) * y * (1.0 - y));
        let w = ScalarField::from_fn(g, |x, y| (x - y).exp());
        let a = trilinear_a(&u, &v, &w).unwrap();
        assert!(a.abs() <= linf_norm(&u) * h1_seminorm(&v) * h1_seminorm(&w));
    }
}
