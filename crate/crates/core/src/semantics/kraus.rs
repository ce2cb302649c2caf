//! Quantum CP maps in operator-sum (Kraus) form.

use num_complex::Complex64;

use super::{flat_size, ObjectSem};

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> CMat {
        CMat {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> CMat {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> CMat {
        let r = rows.len();
        let c = rows.first().map(|x| x.len()).unwrap_or(0);
        CMat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_real(rows: Vec<Vec<f64>>) -> CMat {
        CMat::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn mul(&self, other: &CMat) -> CMat {
        assert_eq!(self.cols, other.rows);
        let mut out = CMat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    let v = out.get(r, c) + a * other.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        out
    }

    pub fn kron(&self, other: &CMat) -> CMat {
        let mut out = CMat::zeros(self.rows * other.rows, self.cols * other.cols);
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let a = self.get(r1, c1);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        out.set(
                            r1 * other.rows + r2,
                            c1 * other.cols + c2,
                            a * other.get(r2, c2),
                        );
                    }
                }
            }
        }
        out
    }

    pub fn dagger(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    pub fn add_assign(&mut self, other: &CMat) {
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b;
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_dist(&self, other: &CMat) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// CP map as a list of Kraus operators (each cod_dim × dom_dim); trace
/// preservation, i.e. being a channel, means Σ K†K = I.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausMorph {
    pub dom: Vec<ObjectSem>,
    pub cod: Vec<ObjectSem>,
    pub ops: Vec<CMat>,
}

impl KrausMorph {
    pub fn new(dom: Vec<ObjectSem>, cod: Vec<ObjectSem>, ops: Vec<CMat>) -> KrausMorph {
        let d = flat_size(&dom);
        let c = flat_size(&cod);
        for k in &ops {
            assert_eq!((k.rows, k.cols), (c, d), "Kraus operator shape");
        }
        KrausMorph { dom, cod, ops }
    }

    /// Pure map from a single operator (e.g. a unitary).
    pub fn pure(dom: Vec<ObjectSem>, cod: Vec<ObjectSem>, op: CMat) -> KrausMorph {
        KrausMorph::new(dom, cod, vec![op])
    }

    /// State preparing the pure vector |psi>.
    pub fn pure_state(obj: &ObjectSem, psi: &[Complex64]) -> KrausMorph {
        let mut op = CMat::zeros(obj.size(), 1);
        for (i, &a) in psi.iter().enumerate() {
            op.set(i, 0, a);
        }
        KrausMorph::new(vec![], vec![obj.clone()], vec![op])
    }

    pub fn identity(objs: &[ObjectSem]) -> KrausMorph {
        let n = flat_size(objs);
        KrausMorph {
            dom: objs.to_vec(),
            cod: objs.to_vec(),
            ops: vec![CMat::identity(n)],
        }
    }

    /// Discarding = trace: Kraus operators {⟨i|}.
    pub fn discard(obj: &ObjectSem) -> KrausMorph {
        let d = obj.size();
        let ops = (0..d)
            .map(|i| {
                let mut k = CMat::zeros(1, d);
                k.set(0, i, Complex64::new(1.0, 0.0));
                k
            })
            .collect();
        KrausMorph {
            dom: vec![obj.clone()],
            cod: vec![],
            ops,
        }
    }

    pub fn permute(objs: &[ObjectSem], perm: &[usize]) -> KrausMorph {
        let dims: Vec<usize> = objs.iter().map(|o| o.size()).collect();
        let n: usize = dims.iter().product();
        let cod: Vec<ObjectSem> = {
            let mut out = vec![objs[0].clone(); objs.len()];
            for (i, &p) in perm.iter().enumerate() {
                out[p] = objs[i].clone();
            }
            out
        };
        let cod_dims: Vec<usize> = cod.iter().map(|o| o.size()).collect();
        let mut op = CMat::zeros(n, n);
        for x in 0..n {
            // Decompose x over dom dims, reassemble over cod slots.
            let mut rem = x;
            let mut idx = vec![0usize; dims.len()];
            for (k, &d) in dims.iter().enumerate().rev() {
                idx[k] = rem % d;
                rem /= d;
            }
            let mut out_idx = vec![0usize; dims.len()];
            for (i, &p) in perm.iter().enumerate() {
                out_idx[p] = idx[i];
            }
            let mut y = 0usize;
            for (k, &d) in cod_dims.iter().enumerate() {
                y = y * d + out_idx[k];
            }
            op.set(y, x, Complex64::new(1.0, 0.0));
        }
        KrausMorph {
            dom: objs.to_vec(),
            cod,
            ops: vec![op],
        }
    }

    pub fn then(&self, next: &KrausMorph) -> KrausMorph {
        let mut ops = Vec::with_capacity(self.ops.len() * next.ops.len());
        for k2 in &next.ops {
            for k1 in &self.ops {
                ops.push(k2.mul(k1));
            }
        }
        KrausMorph {
            dom: self.dom.clone(),
            cod: next.cod.clone(),
            ops,
        }
    }

    pub fn tensor(&self, other: &KrausMorph) -> KrausMorph {
        let mut dom = self.dom.clone();
        dom.extend(other.dom.iter().cloned());
        let mut cod = self.cod.clone();
        cod.extend(other.cod.iter().cloned());
        let mut ops = Vec::with_capacity(self.ops.len() * other.ops.len());
        for k1 in &self.ops {
            for k2 in &other.ops {
                ops.push(k1.kron(k2));
            }
        }
        KrausMorph { dom, cod, ops }
    }

    /// Completeness: Σ K†K = I within tolerance.
    pub fn is_channel(&self, tol: f64) -> bool {
        let d = flat_size(&self.dom);
        let mut sum = CMat::zeros(d, d);
        for k in &self.ops {
            sum.add_assign(&k.dagger().mul(k));
        }
        let id = CMat::identity(d);
        sum.frobenius_dist(&id) <= tol
    }

    /// Density matrix of a state (CP map applied to the unit scalar).
    pub fn density_matrix(&self) -> Option<CMat> {
        if !self.dom.is_empty() {
            return None;
        }
        let c = flat_size(&self.cod);
        let mut rho = CMat::zeros(c, c);
        for k in &self.ops {
            rho.add_assign(&k.mul(&k.dagger()));
        }
        Some(rho)
    }

    /// Choi matrix: Σ_k v_k v_k† with v_k[(i, r)] = K_k[r, i].
    pub fn choi(&self) -> CMat {
        let d = flat_size(&self.dom);
        let c = flat_size(&self.cod);
        let n = d * c;
        let mut out = CMat::zeros(n, n);
        for k in &self.ops {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..d {
                for r in 0..c {
                    v[i * c + r] = k.get(r, i);
                }
            }
            for a in 0..n {
                for b in 0..n {
                    let val = out.get(a, b) + v[a] * v[b].conj();
                    out.set(a, b, val);
                }
            }
        }
        out
    }

    pub fn choi_frobenius_dist(&self, other: &KrausMorph) -> f64 {
        self.choi().frobenius_dist(&other.choi())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit() -> ObjectSem {
        ObjectSem::Hilbert(2)
    }

    fn x_gate() -> CMat {
        CMat::from_real(vec![vec![0.0, 1.0], vec![1.0, 0.0]])
    }

    #[test]
    fn unitary_is_channel() {
        let x = KrausMorph::pure(vec![qubit()], vec![qubit()], x_gate());
        assert!(x.is_channel(1e-10));
    }

    #[test]
    fn non_trace_preserving_caught() {
        let half = CMat::from_real(vec![vec![0.7, 0.0], vec![0.0, 0.7]]);
        let m = KrausMorph::pure(vec![qubit()], vec![qubit()], half);
        assert!(!m.is_channel(1e-10));
    }

    #[test]
    fn bell_state_partial_trace_is_maximally_mixed() {
        // |Φ+> = (|00> + |11>)/√2 over two qubits; tracing out the second
        // qubit leaves I/2.
        let inv = 1.0 / 2.0_f64.sqrt();
        let two = [qubit(), qubit()];
        let mut op = CMat::zeros(4, 1);
        op.set(0, 0, Complex64::new(inv, 0.0));
        op.set(3, 0, Complex64::new(inv, 0.0));
        let bell = KrausMorph::new(vec![], two.to_vec(), vec![op]);
        let keep_first = bell.then(
            &KrausMorph::identity(&[qubit()]).tensor(&KrausMorph::discard(&qubit())),
        );
        let rho = keep_first.density_matrix().unwrap();
        let expected = CMat::from_real(vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
        assert!(rho.frobenius_dist(&expected) < 1e-10);
    }

    #[test]
    fn choi_distance_zero_for_equal_channels_in_different_presentations() {
        // Z-basis dephasing written with two different Kraus decompositions.
        let k0 = CMat::from_real(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let k1 = CMat::from_real(vec![vec![0.0, 0.0], vec![0.0, 1.0]]);
        let a = KrausMorph::new(vec![qubit()], vec![qubit()], vec![k0, k1]);
        let inv = 1.0 / 2.0_f64.sqrt();
        let i_half = CMat::from_real(vec![vec![inv, 0.0], vec![0.0, inv]]);
        let z_half = CMat::from_real(vec![vec![inv, 0.0], vec![0.0, -inv]]);
        let b = KrausMorph::new(vec![qubit()], vec![qubit()], vec![i_half, z_half]);
        assert!(a.choi_frobenius_dist(&b) < 1e-10);
    }
}
