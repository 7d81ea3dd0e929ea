//! Hermite beam elements for a clamped-free Euler-Bernoulli beam.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{orient, BeamProperties, Mode, ModalModel, ModelSource, Normalization};
use crate::error::{Error, Result};

/// Reduced stiffness and consistent mass matrices of a uniform cantilever
/// meshed with `n_elements` equal two-node elements.
///
/// DOF order is `[w₁, θ₁, w₂, θ₂, …, w_n, θ_n]`; the clamped node 0 is removed.
pub fn cantilever_matrices(
    props: &BeamProperties,
    n_elements: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    props.validate()?;
    if n_elements < 4 {
        return Err(Error::invalid(format!(
            "n_elements must be at least 4, got {n_elements}"
        )));
    }
    let le = props.length / n_elements as f64;
    let k = props.bending_stiffness / le.powi(3);
    let m = props.mass_per_length * le / 420.0;
    let l2 = le * le;
    #[rustfmt::skip]
    let ke = [
        [12.0 * k,      6.0 * le * k,  -12.0 * k,      6.0 * le * k],
        [6.0 * le * k,  4.0 * l2 * k,  -6.0 * le * k,  2.0 * l2 * k],
        [-12.0 * k,     -6.0 * le * k, 12.0 * k,       -6.0 * le * k],
        [6.0 * le * k,  2.0 * l2 * k,  -6.0 * le * k,  4.0 * l2 * k],
    ];
    #[rustfmt::skip]
    let me = [
        [156.0 * m,      22.0 * le * m,  54.0 * m,       -13.0 * le * m],
        [22.0 * le * m,  4.0 * l2 * m,   13.0 * le * m,  -3.0 * l2 * m],
        [54.0 * m,       13.0 * le * m,  156.0 * m,      -22.0 * le * m],
        [-13.0 * le * m, -3.0 * l2 * m,  -22.0 * le * m, 4.0 * l2 * m],
    ];

    let n_full = 2 * (n_elements + 1);
    let mut kg = DMatrix::zeros(n_full, n_full);
    let mut mg = DMatrix::zeros(n_full, n_full);
    for e in 0..n_elements {
        let base = 2 * e;
        for r in 0..4 {
            for c in 0..4 {
                kg[(base + r, base + c)] += ke[r][c];
                mg[(base + r, base + c)] += me[r][c];
            }
        }
    }
    let n = n_full - 2;
    Ok((
        kg.view((2, 2), (n, n)).into_owned(),
        mg.view((2, 2), (n, n)).into_owned(),
    ))
}

/// Lowest `n_modes` modes of the discretized cantilever, mass-normalized
/// (φᵀMφ = I). Shapes come from the translational DOFs and slopes from the
/// rotational DOFs, sampled at the element nodes.
pub fn fe_beam_modes(
    props: &BeamProperties,
    n_elements: usize,
    n_modes: usize,
) -> Result<ModalModel> {
    if n_modes == 0 || n_modes > n_elements {
        return Err(Error::invalid(format!(
            "n_modes must lie in 1..={n_elements} for {n_elements} elements, got {n_modes}"
        )));
    }
    let (k, m) = cantilever_matrices(props, n_elements)?;
    let n = k.nrows();

    let chol = m.clone().cholesky().ok_or_else(|| {
        Error::Numerical(format!(
            "mass matrix ({n}×{n}) is not positive definite; Cholesky factorization failed"
        ))
    })?;
    let l = chol.l();
    // L⁻¹ K L⁻ᵀ
    let x = l
        .solve_lower_triangular(&k)
        .ok_or_else(|| Error::Numerical("triangular solve with mass factor failed".into()))?;
    let mut s = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve with mass factor failed".into()))?;
    s = (&s + s.transpose()) * 0.5;

    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 0).ok_or_else(|| {
        Error::Numerical(format!("symmetric eigen-solver did not converge on {n}×{n} problem"))
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let lt = l.transpose();
    let mut grid: Vec<f64> = (0..=n_elements)
        .map(|i| props.length * i as f64 / n_elements as f64)
        .collect();
    grid[n_elements] = props.length;

    let mut modes = Vec::with_capacity(n_modes);
    for (i, &col) in order.iter().take(n_modes).enumerate() {
        let lambda = eig.eigenvalues[col];
        if !(lambda > 0.0) {
            return Err(Error::Numerical(format!(
                "eigenvalue {} of mode {} is not positive (matrix size {n})",
                lambda,
                i + 1
            )));
        }
        let y = eig.eigenvectors.column(col).into_owned();
        let v = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Numerical("back-substitution of eigenvector failed".into()))?;
        let mut phi = vec![0.0; n_elements + 1];
        let mut theta = vec![0.0; n_elements + 1];
        for node in 1..=n_elements {
            phi[node] = v[2 * (node - 1)];
            theta[node] = v[2 * (node - 1) + 1];
        }
        orient(&mut phi, &mut theta);
        modes.push(Mode {
            index: i + 1,
            omega: lambda.sqrt(),
            modal_mass: 1.0,
            zeta: props.structural_damping,
            phi,
            theta,
        });
    }

    ModalModel::new(grid, modes, ModelSource::FiniteElement, Normalization::MassNormalized)
}

/// Reassembles the reduced DOF vector of an FE mode, matching the layout of
/// [`cantilever_matrices`].
pub fn fe_dof_vector(mode: &Mode) -> DVector<f64> {
    let nodes = mode.phi.len() - 1;
    DVector::from_iterator(
        2 * nodes,
        (1..=nodes).flat_map(|k| [mode.phi[k], mode.theta[k]]),
    )
}
