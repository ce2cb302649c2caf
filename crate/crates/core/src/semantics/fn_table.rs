//! Finite function tables: total maps between products of finite carriers.

use super::{flat_index, flat_size, unflat_index, ObjectSem, SemanticsError};

/// Total function on flattened row-major indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FnTable {
    pub dom: Vec<ObjectSem>,
    pub cod: Vec<ObjectSem>,
    /// `map[x] = y` over flat indices; length equals the dom size.
    pub map: Vec<usize>,
}

impl FnTable {
    pub fn new(
        dom: Vec<ObjectSem>,
        cod: Vec<ObjectSem>,
        map: Vec<usize>,
    ) -> Result<FnTable, SemanticsError> {
        let d = flat_size(&dom);
        let c = flat_size(&cod);
        if map.len() != d {
            return Err(SemanticsError::BadMorphism(format!(
                "table has {} entries, dom has {d}",
                map.len()
            )));
        }
        if let Some(&bad) = map.iter().find(|&&y| y >= c) {
            return Err(SemanticsError::BadMorphism(format!(
                "table value {bad} out of range (cod size {c})"
            )));
        }
        Ok(FnTable { dom, cod, map })
    }

    /// Builds a table from a closure over per-factor indices.
    pub fn from_fn(
        dom: Vec<ObjectSem>,
        cod: Vec<ObjectSem>,
        f: impl Fn(&[usize]) -> Vec<usize>,
    ) -> FnTable {
        let d = flat_size(&dom);
        let map = (0..d)
            .map(|x| {
                let xs = unflat_index(&dom, x);
                let ys = f(&xs);
                flat_index(&cod, &ys)
            })
            .collect();
        FnTable { dom, cod, map }
    }

    /// Sharp state selecting one element of a single carrier.
    pub fn point(obj: &ObjectSem, value: usize) -> FnTable {
        FnTable {
            dom: vec![],
            cod: vec![obj.clone()],
            map: vec![value],
        }
    }

    pub fn identity(objs: &[ObjectSem]) -> FnTable {
        let n = flat_size(objs);
        FnTable {
            dom: objs.to_vec(),
            cod: objs.to_vec(),
            map: (0..n).collect(),
        }
    }

    pub fn copy(obj: &ObjectSem, n: usize) -> FnTable {
        let cod = vec![obj.clone(); n];
        let size = obj.size();
        let map = (0..size)
            .map(|x| {
                let mut flat = 0usize;
                for _ in 0..n {
                    flat = flat * size + x;
                }
                flat
            })
            .collect();
        FnTable {
            dom: vec![obj.clone()],
            cod,
            map,
        }
    }

    pub fn discard(obj: &ObjectSem) -> FnTable {
        FnTable {
            dom: vec![obj.clone()],
            cod: vec![],
            map: vec![0; obj.size()],
        }
    }

    pub fn permute(objs: &[ObjectSem], perm: &[usize]) -> FnTable {
        let cod: Vec<ObjectSem> = {
            let mut out = vec![ObjectSem::FinSet(vec![String::new()]); objs.len()];
            for (i, &p) in perm.iter().enumerate() {
                out[p] = objs[i].clone();
            }
            out
        };
        let table = FnTable::from_fn(objs.to_vec(), cod, |xs| {
            let mut ys = vec![0usize; xs.len()];
            for (i, &x) in xs.iter().enumerate() {
                ys[perm[i]] = x;
            }
            ys
        });
        table
    }

    pub fn then(&self, next: &FnTable) -> FnTable {
        FnTable {
            dom: self.dom.clone(),
            cod: next.cod.clone(),
            map: self.map.iter().map(|&y| next.map[y]).collect(),
        }
    }

    pub fn tensor(&self, other: &FnTable) -> FnTable {
        let mut dom = self.dom.clone();
        dom.extend(other.dom.iter().cloned());
        let mut cod = self.cod.clone();
        cod.extend(other.cod.iter().cloned());
        let od = flat_size(&other.dom);
        let oc = flat_size(&other.cod);
        let mut map = Vec::with_capacity(self.map.len() * od);
        for &y1 in &self.map {
            for &y2 in &other.map {
                map.push(y1 * oc + y2);
            }
        }
        FnTable { dom, cod, map }
    }

    /// Applies the table to per-factor indices.
    pub fn apply(&self, xs: &[usize]) -> Vec<usize> {
        let y = self.map[flat_index(&self.dom, xs)];
        unflat_index(&self.cod, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bools() -> ObjectSem {
        ObjectSem::FinSet(vec!["0".into(), "1".into()])
    }

    #[test]
    fn xor_table_composes_with_identity() {
        let b = bools();
        let xor = FnTable::from_fn(vec![b.clone(), b.clone()], vec![b.clone()], |xs| {
            vec![xs[0] ^ xs[1]]
        });
        let xid = xor.then(&FnTable::identity(std::slice::from_ref(&b)));
        assert_eq!(xor, xid);
    }

    #[test]
    fn copy_duplicates_points() {
        let b = bools();
        let c = FnTable::copy(&b, 3);
        assert_eq!(c.apply(&[1]), vec![1, 1, 1]);
        assert_eq!(c.apply(&[0]), vec![0, 0, 0]);
    }

    #[test]
    fn permute_routes_factors() {
        let a = ObjectSem::FinSet(vec!["a1".into(), "a2".into()]);
        let b = ObjectSem::FinSet(vec!["b1".into(), "b2".into(), "b3".into()]);
        // perm[i] is the output slot of input factor i: (x, y) -> (y, x).
        let p = FnTable::permute(&[a.clone(), b.clone()], &[1, 0]);
        assert_eq!(p.cod, vec![b, a]);
        assert_eq!(p.apply(&[1, 2]), vec![2, 1]);
    }

    #[test]
    fn table_value_out_of_range_rejected() {
        let b = bools();
        let err = FnTable::new(vec![b.clone()], vec![b], vec![0, 7]).unwrap_err();
        assert!(matches!(err, SemanticsError::BadMorphism(_)));
    }
}
