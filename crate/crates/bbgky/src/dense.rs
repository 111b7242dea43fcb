//! Dense operators on labelled tensor-product spaces.
//!
//! An [`Operator`] acts on an ordered list of sites. Row and column indices
//! are mixed-radix numbers with the first site most significant. All
//! operations keep the site list sorted, so two operators on the same sites
//! can be added directly.

use bbgky_core::Single;
use num_complex::Complex64;

use crate::error::AppError;

#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    sites: Vec<Single>,
    dims: Vec<usize>,
    data: Vec<Complex64>,
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * dims[i + 1];
    }
    s
}

/// Offset contribution of each multi-index over `sub` (a subset of the
/// sites of `full`, given by positions) inside the full index space.
fn sub_offsets(full_dims: &[usize], positions: &[usize]) -> Vec<usize> {
    let st = strides(full_dims);
    let mut out = vec![0usize];
    for &p in positions {
        let mut next = Vec::with_capacity(out.len() * full_dims[p]);
        for &o in &out {
            for k in 0..full_dims[p] {
                next.push(o + k * st[p]);
            }
        }
        out = next;
    }
    out
}

impl Operator {
    /// `sites` must be sorted and `data` row-major of side `Π dims`.
    pub fn new(sites: Vec<Single>, dims: Vec<usize>, data: Vec<Complex64>) -> Result<Self, AppError> {
        if sites.len() != dims.len() || sites.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AppError::structural("operator sites must be sorted and match the dimensions"));
        }
        let n: usize = dims.iter().product();
        if data.len() != n * n {
            return Err(AppError::structural(format!("operator data has {} entries, expected {}", data.len(), n * n)));
        }
        Ok(Operator { sites, dims, data })
    }

    pub fn zeros(sites: Vec<Single>, dims: Vec<usize>) -> Self {
        let n: usize = dims.iter().product();
        Operator { sites, dims, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    /// The scalar `1` on the empty site list.
    pub fn one() -> Self {
        Operator { sites: Vec::new(), dims: Vec::new(), data: vec![Complex64::new(1.0, 0.0)] }
    }

    pub fn sites(&self) -> &[Single] {
        &self.sites
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn side(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.side() + c]
    }

    fn position(&self, s: &Single) -> Option<usize> {
        self.sites.iter().position(|x| x == s)
    }

    fn check_same_space(&self, other: &Operator) -> Result<(), AppError> {
        if self.sites != other.sites || self.dims != other.dims {
            return Err(AppError::structural(format!(
                "operators act on different spaces: {:?} and {:?}",
                self.sites, other.sites
            )));
        }
        Ok(())
    }

    pub fn add_assign_scaled(&mut self, other: &Operator, scale: f64) -> Result<(), AppError> {
        self.check_same_space(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * scale;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator, AppError> {
        let mut out = self.clone();
        out.add_assign_scaled(other, -1.0)?;
        Ok(out)
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        let n = self.side();
        (0..n).map(|i| self.data[i * n + i]).sum()
    }

    /// Frobenius norm of `self - self†`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.side();
        let mut acc = 0.0;
        for r in 0..n {
            for c in 0..n {
                acc += (self.data[r * n + c] - self.data[c * n + r].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Tensor product of operators on disjoint sites.
    pub fn kron(&self, other: &Operator) -> Result<Operator, AppError> {
        if self.sites.iter().any(|s| other.sites.contains(s)) {
            return Err(AppError::structural("tensor product of operators sharing a site"));
        }
        let mut merged: Vec<(Single, usize, bool)> = self
            .sites
            .iter()
            .zip(&self.dims)
            .map(|(s, d)| (*s, *d, true))
            .chain(other.sites.iter().zip(&other.dims).map(|(s, d)| (*s, *d, false)))
            .collect();
        merged.sort_by_key(|x| x.0);
        let dims: Vec<usize> = merged.iter().map(|x| x.1).collect();
        let sites: Vec<Single> = merged.iter().map(|x| x.0).collect();
        let n: usize = dims.iter().product();
        // For each full index, the index into `self` and into `other`.
        let sa = strides(&self.dims);
        let sb = strides(&other.dims);
        let mut ia = vec![0usize; n];
        let mut ib = vec![0usize; n];
        let fs = strides(&dims);
        for i in 0..n {
            let (mut ka, mut kb) = (0, 0);
            let (mut pa, mut pb) = (0, 0);
            for (p, m) in merged.iter().enumerate() {
                let digit = (i / fs[p]) % dims[p];
                if m.2 {
                    ka += digit * sa[pa];
                    pa += 1;
                } else {
                    kb += digit * sb[pb];
                    pb += 1;
                }
            }
            ia[i] = ka;
            ib[i] = kb;
        }
        let (na, nb) = (self.side(), other.side());
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                data.push(self.data[ia[r] * na + ia[c]] * other.data[ib[r] * nb + ib[c]]);
            }
        }
        Ok(Operator { sites, dims, data })
    }

    /// Partial trace keeping `keep` (a subset of the operator's sites).
    pub fn partial_trace(&self, keep: &[Single]) -> Result<Operator, AppError> {
        let mut keep_pos = Vec::new();
        for s in keep {
            keep_pos.push(self.position(s).ok_or_else(|| AppError::structural(format!("{s} is not a site of the operator")))?);
        }
        keep_pos.sort_unstable();
        keep_pos.dedup();
        let trace_pos: Vec<usize> = (0..self.sites.len()).filter(|p| !keep_pos.contains(p)).collect();
        let ko = sub_offsets(&self.dims, &keep_pos);
        let to = sub_offsets(&self.dims, &trace_pos);
        let n = self.side();
        let m = ko.len();
        let mut data = vec![Complex64::new(0.0, 0.0); m * m];
        for (i, &oi) in ko.iter().enumerate() {
            for (j, &oj) in ko.iter().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for &t in &to {
                    acc += self.data[(oi + t) * n + oj + t];
                }
                data[i * m + j] = acc;
            }
        }
        Ok(Operator {
            sites: keep_pos.iter().map(|&p| self.sites[p]).collect(),
            dims: keep_pos.iter().map(|&p| self.dims[p]).collect(),
            data,
        })
    }

    /// `op · self` (`left = true`) or `self · op` with `op` acting on the
    /// listed sites only.
    fn apply_local(&self, op_sites: &[Single], op: &Operator, left: bool) -> Result<Operator, AppError> {
        let mut pos = Vec::new();
        for s in op_sites {
            pos.push(self.position(s).ok_or_else(|| AppError::structural(format!("operator site {s} outside the support")))?);
        }
        let local = sub_offsets(&self.dims, &pos);
        if local.len() != op.side() {
            return Err(AppError::structural("local operator dimension mismatch"));
        }
        let rest_pos: Vec<usize> = (0..self.sites.len()).filter(|p| !pos.contains(p)).collect();
        let rest = sub_offsets(&self.dims, &rest_pos);
        let n = self.side();
        let k = local.len();
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        let mut buf = vec![Complex64::new(0.0, 0.0); k];
        for &base in &rest {
            for other in 0..n {
                for (a, &la) in local.iter().enumerate() {
                    buf[a] = if left { self.data[(base + la) * n + other] } else { self.data[other * n + base + la] };
                }
                for (b, &lb) in local.iter().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (a, x) in buf.iter().enumerate() {
                        acc += if left { op.data[b * k + a] * x } else { x * op.data[a * k + b] };
                    }
                    if left {
                        out[(base + lb) * n + other] = acc;
                    } else {
                        out[other * n + base + lb] = acc;
                    }
                }
            }
        }
        Ok(Operator { sites: self.sites.clone(), dims: self.dims.clone(), data: out })
    }

    /// `[op, self]` with `op` acting on `op_sites`.
    pub fn commutator_with(&self, op_sites: &[Single], op: &Operator) -> Result<Operator, AppError> {
        let mut l = self.apply_local(op_sites, op, true)?;
        let r = self.apply_local(op_sites, op, false)?;
        l.add_assign_scaled(&r, -1.0)?;
        Ok(l)
    }
}
