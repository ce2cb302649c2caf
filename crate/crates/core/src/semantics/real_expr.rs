//! Real-vector expression graphs: function semantics for neural models.
//!
//! Morphisms are programs over a small primitive set, evaluated pointwise on
//! concatenated coordinate vectors (tensor is direct sum). Equality is
//! decided by sampling on a fixed-seed pseudo-random input set, so it is a
//! semidecision favouring reproducibility.

use super::ObjectSem;

/// Direct-sum dimension of a real factor list (empty list has dimension 0).
fn dims_sum(objs: &[ObjectSem]) -> usize {
    objs.iter().map(|o| o.size()).sum()
}

/// Number of sample points for sampled comparisons.
const SAMPLE_COUNT: usize = 256;
/// Fixed seed for the sampling generator.
const SAMPLE_SEED: u64 = 0x5EED_1DEA_2024_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
    Softmax,
    Id,
}

impl Activation {
    pub fn apply(self, x: &mut [f64]) {
        match self {
            Activation::Relu => {
                for v in x.iter_mut() {
                    *v = v.max(0.0);
                }
            }
            Activation::Sigmoid => {
                for v in x.iter_mut() {
                    *v = 1.0 / (1.0 + (-*v).exp());
                }
            }
            Activation::Tanh => {
                for v in x.iter_mut() {
                    *v = v.tanh();
                }
            }
            Activation::Softmax => {
                let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for v in x.iter_mut() {
                    *v = (*v - m).exp();
                    z += *v;
                }
                for v in x.iter_mut() {
                    *v /= z;
                }
            }
            Activation::Id => {}
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Softmax => "softmax",
            Activation::Id => "id",
        }
    }
}

/// Expression over the primitive set; `in_dim`/`out_dim` are derived.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Id(usize),
    /// Constant vector: 0 → len.
    Const(Vec<f64>),
    /// rows × cols matrix application.
    Linear(Vec<Vec<f64>>),
    BiasAdd(Vec<f64>),
    Activation(Activation, usize),
    /// Pointwise sum of two blocks of `dim`: 2·dim → dim.
    Add(usize),
    ScalarMult(f64, usize),
    /// Duplicate a block: dim → n·dim.
    Copy { dim: usize, n: usize },
    /// dim → 0.
    Discard(usize),
    /// Reorder blocks; block `i` (of `dims[i]`) moves to slot `perm[i]`.
    Permute { dims: Vec<usize>, perm: Vec<usize> },
    Seq(Box<Expr>, Box<Expr>),
    Par(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn in_dim(&self) -> usize {
        match self {
            Expr::Id(d) => *d,
            Expr::Const(_) => 0,
            Expr::Linear(m) => m.first().map(|r| r.len()).unwrap_or(0),
            Expr::BiasAdd(b) => b.len(),
            Expr::Activation(_, d) => *d,
            Expr::Add(d) => 2 * d,
            Expr::ScalarMult(_, d) => *d,
            Expr::Copy { dim, .. } => *dim,
            Expr::Discard(d) => *d,
            Expr::Permute { dims, .. } => dims.iter().sum(),
            Expr::Seq(a, _) => a.in_dim(),
            Expr::Par(a, b) => a.in_dim() + b.in_dim(),
        }
    }

    pub fn out_dim(&self) -> usize {
        match self {
            Expr::Id(d) => *d,
            Expr::Const(v) => v.len(),
            Expr::Linear(m) => m.len(),
            Expr::BiasAdd(b) => b.len(),
            Expr::Activation(_, d) => *d,
            Expr::Add(d) => *d,
            Expr::ScalarMult(_, d) => *d,
            Expr::Copy { dim, n } => dim * n,
            Expr::Discard(_) => 0,
            Expr::Permute { dims, .. } => dims.iter().sum(),
            Expr::Seq(_, b) => b.out_dim(),
            Expr::Par(a, b) => a.out_dim() + b.out_dim(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim());
        match self {
            Expr::Id(_) => x.to_vec(),
            Expr::Const(v) => v.clone(),
            Expr::Linear(m) => m
                .iter()
                .map(|row| row.iter().zip(x.iter()).map(|(a, b)| a * b).sum())
                .collect(),
            Expr::BiasAdd(b) => x.iter().zip(b.iter()).map(|(a, c)| a + c).collect(),
            Expr::Activation(act, _) => {
                let mut out = x.to_vec();
                act.apply(&mut out);
                out
            }
            Expr::Add(d) => (0..*d).map(|i| x[i] + x[d + i]).collect(),
            Expr::ScalarMult(r, _) => x.iter().map(|v| r * v).collect(),
            Expr::Copy { dim, n } => {
                let mut out = Vec::with_capacity(dim * n);
                for _ in 0..*n {
                    out.extend_from_slice(&x[..*dim]);
                }
                out
            }
            Expr::Discard(_) => Vec::new(),
            Expr::Permute { dims, perm } => {
                let mut offsets = Vec::with_capacity(dims.len());
                let mut acc = 0;
                for &d in dims {
                    offsets.push(acc);
                    acc += d;
                }
                let mut out_dims = vec![0usize; dims.len()];
                for (i, &p) in perm.iter().enumerate() {
                    out_dims[p] = dims[i];
                }
                let mut out_offsets = Vec::with_capacity(dims.len());
                let mut acc = 0;
                for &d in &out_dims {
                    out_offsets.push(acc);
                    acc += d;
                }
                let mut out = vec![0.0; acc];
                for (i, &p) in perm.iter().enumerate() {
                    let src = &x[offsets[i]..offsets[i] + dims[i]];
                    out[out_offsets[p]..out_offsets[p] + dims[i]].copy_from_slice(src);
                }
                out
            }
            Expr::Seq(a, b) => b.eval(&a.eval(x)),
            Expr::Par(a, b) => {
                let split = a.in_dim();
                let mut out = a.eval(&x[..split]);
                out.extend(b.eval(&x[split..]));
                out
            }
        }
    }
}

/// A real-vector morphism: expression with explicit factor structure.
#[derive(Debug, Clone, PartialEq)]
pub struct RealExpr {
    pub dom: Vec<ObjectSem>,
    pub cod: Vec<ObjectSem>,
    pub expr: Expr,
}

impl RealExpr {
    pub fn new(dom: Vec<ObjectSem>, cod: Vec<ObjectSem>, expr: Expr) -> RealExpr {
        assert_eq!(expr.in_dim(), dims_sum(&dom), "expr input dim");
        assert_eq!(expr.out_dim(), dims_sum(&cod), "expr output dim");
        RealExpr { dom, cod, expr }
    }

    /// Constant vector state.
    pub fn state(obj: &ObjectSem, v: &[f64]) -> RealExpr {
        assert_eq!(v.len(), obj.size());
        RealExpr {
            dom: vec![],
            cod: vec![obj.clone()],
            expr: Expr::Const(v.to_vec()),
        }
    }

    pub fn identity(objs: &[ObjectSem]) -> RealExpr {
        RealExpr {
            dom: objs.to_vec(),
            cod: objs.to_vec(),
            expr: Expr::Id(dims_sum(objs)),
        }
    }

    pub fn copy(obj: &ObjectSem, n: usize) -> RealExpr {
        RealExpr {
            dom: vec![obj.clone()],
            cod: vec![obj.clone(); n],
            expr: Expr::Copy { dim: obj.size(), n },
        }
    }

    pub fn discard(obj: &ObjectSem) -> RealExpr {
        RealExpr {
            dom: vec![obj.clone()],
            cod: vec![],
            expr: Expr::Discard(obj.size()),
        }
    }

    pub fn permute(objs: &[ObjectSem], perm: &[usize]) -> RealExpr {
        let cod: Vec<ObjectSem> = {
            let mut out = vec![objs[0].clone(); objs.len()];
            for (i, &p) in perm.iter().enumerate() {
                out[p] = objs[i].clone();
            }
            out
        };
        RealExpr {
            dom: objs.to_vec(),
            cod,
            expr: Expr::Permute {
                dims: objs.iter().map(|o| o.size()).collect(),
                perm: perm.to_vec(),
            },
        }
    }

    pub fn then(&self, next: &RealExpr) -> RealExpr {
        RealExpr {
            dom: self.dom.clone(),
            cod: next.cod.clone(),
            expr: Expr::Seq(Box::new(self.expr.clone()), Box::new(next.expr.clone())),
        }
    }

    pub fn tensor(&self, other: &RealExpr) -> RealExpr {
        let mut dom = self.dom.clone();
        dom.extend(other.dom.iter().cloned());
        let mut cod = self.cod.clone();
        cod.extend(other.cod.iter().cloned());
        RealExpr {
            dom,
            cod,
            expr: Expr::Par(Box::new(self.expr.clone()), Box::new(other.expr.clone())),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.expr.eval(x)
    }

    /// Copy-commutation at sampled points: copy∘m vs (m⊗m)∘copy. The two
    /// sides reduce to duplicating one evaluation versus evaluating twice,
    /// so this passes exactly when evaluation is reproducible.
    pub fn is_deterministic(&self) -> bool {
        let n = dims_sum(&self.dom);
        let mut rng = SplitMix64::new(SAMPLE_SEED);
        for _ in 0..16 {
            let x: Vec<f64> = (0..n).map(|_| rng.next_unit()).collect();
            let copied = self.eval(&x);
            let separate = self.eval(&x);
            if copied
                .iter()
                .zip(separate.iter())
                .any(|(a, b)| (a - b).abs() > 1e-9)
            {
                return false;
            }
        }
        true
    }

    /// Max deviation over a fixed-seed sample of inputs in [-1, 1]^dim.
    pub fn sampled_dist(&self, other: &RealExpr) -> f64 {
        let n = dims_sum(&self.dom);
        let mut rng = SplitMix64::new(SAMPLE_SEED);
        let mut worst: f64 = 0.0;
        for _ in 0..SAMPLE_COUNT {
            let x: Vec<f64> = (0..n).map(|_| rng.next_unit()).collect();
            let a = self.eval(&x);
            let b = other.eval(&x);
            for (u, v) in a.iter().zip(b.iter()) {
                worst = worst.max((u - v).abs());
            }
        }
        worst
    }
}

/// SplitMix64: small deterministic generator for reproducible sampling.
pub(crate) struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1].
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: usize) -> ObjectSem {
        ObjectSem::RealSpace(n)
    }

    #[test]
    fn linear_plus_bias_evaluates() {
        let e = RealExpr::new(
            vec![r(2)],
            vec![r(1)],
            Expr::Seq(
                Box::new(Expr::Linear(vec![vec![1.0, 1.0]])),
                Box::new(Expr::BiasAdd(vec![0.5])),
            ),
        );
        assert_eq!(e.eval(&[2.0, 3.0]), vec![5.5]);
    }

    #[test]
    fn relu_clamps_negative() {
        let e = RealExpr::new(vec![r(1)], vec![r(1)], Expr::Activation(Activation::Relu, 1));
        assert_eq!(e.eval(&[-1.0]), vec![0.0]);
        assert_eq!(e.eval(&[2.0]), vec![2.0]);
    }

    #[test]
    fn sampled_dist_zero_for_rearranged_composites() {
        // (id ⊗ id) ; add == add.
        let add = RealExpr::new(vec![r(1), r(1)], vec![r(1)], Expr::Add(1));
        let idid = RealExpr::identity(&[r(1), r(1)]);
        let composite = idid.then(&add);
        assert_eq!(composite.sampled_dist(&add), 0.0);
    }

    #[test]
    fn linear_axioms_at_sampled_points() {
        // r·(v + w) = r·v + r·w with r = 2.5 on 3-dim blocks.
        let rr = 2.5;
        let add = RealExpr::new(vec![r(3), r(3)], vec![r(3)], Expr::Add(3));
        let scale = RealExpr::new(vec![r(3)], vec![r(3)], Expr::ScalarMult(rr, 3));
        let lhs = add.then(&scale);
        let rhs = scale.tensor(&scale).then(&add);
        assert!(lhs.sampled_dist(&rhs) < 1e-9);
    }

    #[test]
    fn determinism_check_passes_for_functions() {
        let e = RealExpr::new(vec![r(2)], vec![r(2)], Expr::Activation(Activation::Tanh, 2));
        assert!(e.is_deterministic());
    }
}
