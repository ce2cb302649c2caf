//! Nonnegative matrices over finite carriers; channels are column-stochastic.

use super::{flat_size, ObjectSem};

/// Dense nonnegative matrix indexed cod × dom (entry `(r, c)` at
/// `r * dom_size + c`). Column `c` is the image of the `c`-th dom point.
#[derive(Debug, Clone, PartialEq)]
pub struct StochMatrix {
    pub dom: Vec<ObjectSem>,
    pub cod: Vec<ObjectSem>,
    pub data: Vec<f64>,
}

impl StochMatrix {
    pub fn new(dom: Vec<ObjectSem>, cod: Vec<ObjectSem>, data: Vec<f64>) -> StochMatrix {
        assert_eq!(data.len(), flat_size(&dom) * flat_size(&cod));
        StochMatrix { dom, cod, data }
    }

    pub fn dom_size(&self) -> usize {
        flat_size(&self.dom)
    }

    pub fn cod_size(&self) -> usize {
        flat_size(&self.cod)
    }

    pub fn entry(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dom_size() + c]
    }

    /// State (no inputs) from a distribution vector.
    pub fn state(obj: &ObjectSem, dist: &[f64]) -> StochMatrix {
        assert_eq!(dist.len(), obj.size());
        StochMatrix {
            dom: vec![],
            cod: vec![obj.clone()],
            data: dist.to_vec(),
        }
    }

    /// State over several factors from a joint distribution vector.
    pub fn joint_state(objs: &[ObjectSem], dist: &[f64]) -> StochMatrix {
        assert_eq!(dist.len(), flat_size(objs));
        StochMatrix {
            dom: vec![],
            cod: objs.to_vec(),
            data: dist.to_vec(),
        }
    }

    /// Point distribution on one carrier.
    pub fn point(obj: &ObjectSem, value: usize) -> StochMatrix {
        let mut dist = vec![0.0; obj.size()];
        dist[value] = 1.0;
        Self::state(obj, &dist)
    }

    /// Builds a matrix column by column from per-factor dom indices.
    pub fn from_columns(
        dom: Vec<ObjectSem>,
        cod: Vec<ObjectSem>,
        col: impl Fn(&[usize]) -> Vec<f64>,
    ) -> StochMatrix {
        let d = flat_size(&dom);
        let c = flat_size(&cod);
        let mut data = vec![0.0; d * c];
        for x in 0..d {
            let idx = super::unflat_index(&dom, x);
            let column = col(&idx);
            assert_eq!(column.len(), c);
            for (r, &v) in column.iter().enumerate() {
                data[r * d + x] = v;
            }
        }
        StochMatrix { dom, cod, data }
    }

    pub fn identity(objs: &[ObjectSem]) -> StochMatrix {
        let n = flat_size(objs);
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        StochMatrix {
            dom: objs.to_vec(),
            cod: objs.to_vec(),
            data,
        }
    }

    pub fn copy(obj: &ObjectSem, n: usize) -> StochMatrix {
        let size = obj.size();
        let cod = vec![obj.clone(); n];
        let c = flat_size(&cod);
        let mut data = vec![0.0; size * c];
        for x in 0..size {
            let mut flat = 0usize;
            for _ in 0..n {
                flat = flat * size + x;
            }
            data[flat * size + x] = 1.0;
        }
        StochMatrix {
            dom: vec![obj.clone()],
            cod,
            data,
        }
    }

    pub fn discard(obj: &ObjectSem) -> StochMatrix {
        StochMatrix {
            dom: vec![obj.clone()],
            cod: vec![],
            data: vec![1.0; obj.size()],
        }
    }

    pub fn permute(objs: &[ObjectSem], perm: &[usize]) -> StochMatrix {
        let table = super::FnTable::permute(
            // Carrier structure is all that matters for the permutation.
            &objs
                .iter()
                .map(|o| ObjectSem::FinSet(fake_elems(o.size())))
                .collect::<Vec<_>>(),
            perm,
        );
        let cod: Vec<ObjectSem> = {
            let mut out = vec![objs[0].clone(); objs.len()];
            for (i, &p) in perm.iter().enumerate() {
                out[p] = objs[i].clone();
            }
            out
        };
        let d = flat_size(objs);
        let mut data = vec![0.0; d * d];
        for (x, &y) in table.map.iter().enumerate() {
            data[y * d + x] = 1.0;
        }
        StochMatrix {
            dom: objs.to_vec(),
            cod,
            data,
        }
    }

    pub fn then(&self, next: &StochMatrix) -> StochMatrix {
        let d = self.dom_size();
        let mid = self.cod_size();
        let c = next.cod_size();
        let mut data = vec![0.0; d * c];
        for r in 0..c {
            for y in 0..mid {
                let n = next.data[r * mid + y];
                if n == 0.0 {
                    continue;
                }
                for x in 0..d {
                    data[r * d + x] += n * self.data[y * d + x];
                }
            }
        }
        StochMatrix {
            dom: self.dom.clone(),
            cod: next.cod.clone(),
            data,
        }
    }

    pub fn tensor(&self, other: &StochMatrix) -> StochMatrix {
        let (d1, c1) = (self.dom_size(), self.cod_size());
        let (d2, c2) = (other.dom_size(), other.cod_size());
        let mut dom = self.dom.clone();
        dom.extend(other.dom.iter().cloned());
        let mut cod = self.cod.clone();
        cod.extend(other.cod.iter().cloned());
        let mut data = vec![0.0; d1 * d2 * c1 * c2];
        for r1 in 0..c1 {
            for r2 in 0..c2 {
                for x1 in 0..d1 {
                    for x2 in 0..d2 {
                        data[(r1 * c2 + r2) * (d1 * d2) + (x1 * d2 + x2)] =
                            self.data[r1 * d1 + x1] * other.data[r2 * d2 + x2];
                    }
                }
            }
        }
        StochMatrix { dom, cod, data }
    }

    /// Column sums all 1 within tolerance.
    pub fn is_channel(&self, tol: f64) -> bool {
        let d = self.dom_size();
        let c = self.cod_size();
        (0..d).all(|x| {
            let s: f64 = (0..c).map(|r| self.data[r * d + x]).sum();
            (s - 1.0).abs() <= tol
        })
    }

    /// Every column is a point distribution.
    pub fn is_deterministic(&self, tol: f64) -> bool {
        let d = self.dom_size();
        let c = self.cod_size();
        (0..d).all(|x| {
            let mut ones = 0usize;
            for r in 0..c {
                let v = self.data[r * d + x];
                if (v - 1.0).abs() <= tol {
                    ones += 1;
                } else if v.abs() > tol {
                    return false;
                }
            }
            ones == 1
        })
    }

    /// For a deterministic matrix, the image index of each column.
    pub fn column_argmax(&self, x: usize) -> usize {
        let d = self.dom_size();
        (0..self.cod_size())
            .max_by(|&a, &b| {
                self.data[a * d + x]
                    .partial_cmp(&self.data[b * d + x])
                    .unwrap()
            })
            .unwrap_or(0)
    }

    /// Max over columns of the ℓ1 column difference.
    pub fn column_l1_dist(&self, other: &StochMatrix) -> f64 {
        let d = self.dom_size().max(1);
        let c = self.cod_size();
        let mut worst: f64 = 0.0;
        for x in 0..d {
            let mut s = 0.0;
            for r in 0..c {
                let i = r * self.dom_size().max(1) + x;
                s += (self.data[i] - other.data[i]).abs();
            }
            worst = worst.max(s);
        }
        worst
    }

    /// Max over columns of the ℓ1 column norm (distance to zero).
    pub fn column_l1_norm(&self) -> f64 {
        let d = self.dom_size().max(1);
        let c = self.cod_size();
        (0..d)
            .map(|x| (0..c).map(|r| self.data[r * d + x].abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    }
}

fn fake_elems(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}
