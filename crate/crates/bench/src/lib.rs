//! Fixtures shared by the benchmarks.

use epigauge::{build_sharpness_pair, Func, FuncExpr, Grid, LevelGrid, Result};

/// Quadratic target and a bumped copy on `B(0, 1) ⊂ ℝ^dim`.
pub fn bumped_pair(dim: usize) -> Result<(Func, Func)> {
    let f = FuncExpr::Quadratic {
        scale: 1.0,
        center: None,
    };
    let mut center = vec![0.0; dim];
    center[0] = 0.3;
    let g = FuncExpr::Sum {
        terms: vec![
            f.clone(),
            FuncExpr::Bump {
                amplitude: 0.05,
                center,
                rho: 0.2,
            },
        ],
    };
    Ok((f.build(dim, 1.0, "f")?, g.build(dim, 1.0, "g")?))
}

/// Base and level lattices over `C_{1,1}`.
pub fn lattices(dim: usize, step: f64, level_step: f64) -> Result<(Grid, LevelGrid)> {
    Ok((Grid::new(dim, 1.0, step)?, LevelGrid::new(1.0, level_step)?))
}

/// Surrogate of the sharpness family with `μ = 2`, `δ = 0.02`.
pub fn sharpness_surrogate() -> Result<Func> {
    Ok(build_sharpness_pair(2.0, 0.02)?.g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        let (f, g) = bumped_pair(2).unwrap();
        let (grid, levels) = lattices(2, 0.1, 0.1).unwrap();
        let gap = epigauge::grid_sup_abs_diff(&f, &g, &grid).unwrap();
        assert!((gap - 0.05).abs() < 1e-12);
        assert_eq!(levels.values().len(), 21);
        assert!(sharpness_surrogate().is_ok());
    }
}
