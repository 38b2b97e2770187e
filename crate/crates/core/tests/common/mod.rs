#![allow(dead_code)]

use num_complex::Complex;
use rand::Rng;
use tpmcert::linalg::{ComplexMatrix, ComplexVector};
use tpmcert::process::{BinaryPovm, MpInstrument};
use tpmcert::proclib::{bloch_state, pure_state};

pub type M = ComplexMatrix<f64>;

pub fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

pub fn random_matrix<R: Rng>(rng: &mut R, dim: usize) -> M {
    let data = (0..dim * dim)
        .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    M::from_vec(dim, data).unwrap()
}

pub fn matrix_from(dim: usize, v: &[f64]) -> M {
    let data = (0..dim * dim).map(|k| c(v[2 * k], v[2 * k + 1])).collect();
    M::from_vec(dim, data).unwrap()
}

/// `G G† / Tr(G G†)`.
pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> M {
    let g = random_matrix(rng, dim);
    let p = &g * &g.adjoint();
    let t = p.trace().re;
    p.scale_real(1.0 / t)
}

/// Gram–Schmidt on the columns of a random matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, dim: usize) -> M {
    let g = random_matrix(rng, dim);
    let mut cols: Vec<Vec<Complex<f64>>> = Vec::new();
    for j in 0..dim {
        let mut v: Vec<Complex<f64>> = (0..dim).map(|i| g[(i, j)]).collect();
        for u in &cols {
            let proj: Complex<f64> = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= proj * ui;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut v {
            *z /= n;
        }
        cols.push(v);
    }
    let mut u = M::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            u[(i, j)] = *z;
        }
    }
    u
}

pub fn random_unit<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 0.1 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

pub fn random_pure<R: Rng>(rng: &mut R) -> M {
    let theta = rng.random_range(0.0..std::f64::consts::PI);
    let phi = rng.random_range(0.0..2.0 * std::f64::consts::PI);
    bloch_state(theta, phi)
}

pub fn random_povm<R: Rng>(rng: &mut R) -> BinaryPovm<f64> {
    BinaryPovm::along(random_unit(rng)).unwrap()
}

/// Random projective instrument with `n` settings and pure repreparations.
pub fn random_instrument<R: Rng>(rng: &mut R, n: usize) -> MpInstrument<f64> {
    let settings = (0..n).map(|x| x.to_string()).collect();
    let povms = (0..n).map(|_| random_povm(rng)).collect();
    MpInstrument::new(settings, povms, [random_pure(rng), random_pure(rng)]).unwrap()
}

pub fn ket_state(v: &[Complex<f64>]) -> M {
    pure_state(&ComplexVector::new(v.to_vec()).normalized())
}
