#![allow(dead_code)]

use modclass_core::algebroid::AlgebroidPresentation;
use modclass_core::symexpr::{Key, Trig};
use modclass_core::{ScalarFn, Q};
use num_traits::Zero;
use proptest::prelude::*;

pub fn small_q() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Q::new(n.into(), d.into()))
}

fn slope(dim: usize, range: i64) -> impl Strategy<Value = Vec<Q>> {
    prop::collection::vec(-range..=range, dim).prop_map(|v| v.into_iter().map(|c| Q::from_integer(c.into())).collect())
}

/// A term `c x^p exp(e.x) trig(s.x)`; periodic coordinates only enter trig atoms.
fn term(periodic: Vec<bool>) -> impl Strategy<Value = (Key, Q)> {
    let dim = periodic.len();
    (prop::collection::vec(0u32..=2, dim), slope(dim, 1), slope(dim, 2), 0u8..3, small_q()).prop_map(
        move |(mut powers, mut exp, trig, kind, c)| {
            for k in 0..dim {
                if periodic[k] {
                    powers[k] = 0;
                    exp[k] = Q::zero();
                }
            }
            // keep exp slopes off most terms
            if exp.iter().filter(|e| !e.is_zero()).count() > 1 {
                exp.iter_mut().for_each(|e| *e = Q::zero());
            }
            let trig = match kind {
                0 => Trig::One,
                1 => Trig::Sin(trig),
                _ => Trig::Cos(trig),
            };
            (Key { powers, exp, trig }, c)
        },
    )
}

pub fn scalar_fn(periodic: Vec<bool>, max_terms: usize) -> impl Strategy<Value = ScalarFn> {
    let dim = periodic.len();
    prop::collection::vec(term(periodic), 0..=max_terms).prop_map(move |terms| ScalarFn::from_terms(dim, terms))
}

pub fn polynomial(dim: usize, max_terms: usize) -> impl Strategy<Value = ScalarFn> {
    prop::collection::vec((prop::collection::vec(0u32..=3, dim), small_q()), 0..=max_terms).prop_map(move |terms| {
        ScalarFn::from_terms(dim, terms.into_iter().map(|(powers, c)| (Key { powers, exp: vec![Q::zero(); dim], trig: Trig::One }, c)))
    })
}

/// `R ⋉_D R^k` in a random basis: `[e0, v_i] = sum_j D_ji v_j`.
pub fn semidirect_lie_algebra(d: &[Vec<Q>], basis: &[Vec<Q>]) -> Option<AlgebroidPresentation> {
    let r = d.len() + 1;
    // structure constants in the standard basis
    let mut c = vec![vec![vec![Q::zero(); r]; r]; r];
    for i in 0..d.len() {
        for j in 0..d.len() {
            c[0][i + 1][j + 1] = d[j][i].clone();
            c[i + 1][0][j + 1] = -d[j][i].clone();
        }
    }
    let c2 = change_basis(&c, basis)?;
    let frame: Vec<String> = (1..=r).map(|i| format!("e{i}")).collect();
    let mut entries = Vec::new();
    for i in 0..r {
        for j in i + 1..r {
            entries.push((i, j, c2[i][j].clone()));
        }
    }
    AlgebroidPresentation::lie_algebra("g", frame, &entries).ok()
}

fn invert(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { Q::from_integer(1.into()) } else { Q::zero() }));
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|r| !a[*r][col].is_zero())?;
        a.swap(col, p);
        let inv = a[col][col].recip();
        a[col].iter_mut().for_each(|v| *v *= &inv);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot = a[col].clone();
                a[r].iter_mut().zip(pivot).for_each(|(v, p)| *v -= &f * p);
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// New basis `f_a = sum_i basis[a][i] e_i`.
pub fn change_basis(c: &[Vec<Vec<Q>>], basis: &[Vec<Q>]) -> Option<Vec<Vec<Vec<Q>>>> {
    let r = c.len();
    let inv = invert(basis)?;
    let mut out = vec![vec![vec![Q::zero(); r]; r]; r];
    for a in 0..r {
        for b in 0..r {
            for k in 0..r {
                // [f_a, f_b] = sum_ij P_ai P_bj C^k_ij e_k, e_k = sum_c inv[k][c] f_c
                let mut coeff = Q::zero();
                for i in 0..r {
                    for j in 0..r {
                        coeff += &basis[a][i] * &basis[b][j] * &c[i][j][k];
                    }
                }
                if coeff.is_zero() {
                    continue;
                }
                for cc in 0..r {
                    out[a][b][cc] += &coeff * &inv[k][cc];
                }
            }
        }
    }
    Some(out)
}
