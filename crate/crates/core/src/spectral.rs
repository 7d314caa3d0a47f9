//! Ordered complex Schur factorization, eigenvalue clustering and
//! block diagonalization by triangular Sylvester solves.
//!
//! A matrix `A` is factored as `A = Q T Q^*` with `T` upper triangular and
//! the eigenvalues of each cluster contiguous on the diagonal of `T`. A unit
//! block upper triangular `Z` then gives `Z^{-1} T Z = diag(T_11, ..., T_kk)`,
//! from which the spectral (Riesz) idempotents are `Q Z E_k Z^{-1} Q^*`.
//!
//! Clustering is single linkage. Eigenvalues within `tol_cluster * ||A||`
//! always merge. Computed eigenvalues of a defective cluster of size `m`
//! scatter like `eps^(1/m)`, so a wider, multiplicity-dependent radius is
//! also tried; a merge at that radius is accepted only when the compressed
//! block is numerically nilpotent about its mean, which is a rank test
//! rather than a distance test.

use nalgebra::Schur;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{c, check_matrix, identity, kernel_split, op_norm, r, CMatrix, Tolerances, EPS};

/// One group of numerically coincident eigenvalues.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenCluster {
    pub value: Complex64,
    pub multiplicity: usize,
}

/// Position of a cluster on the diagonal of the ordered Schur factor.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterBlock {
    pub center: Complex64,
    pub start: usize,
    pub size: usize,
}

impl ClusterBlock {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.size
    }
}

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Unitary Schur vectors.
    pub q: CMatrix,
    /// Upper triangular Schur factor with clusters contiguous.
    pub t: CMatrix,
    pub clusters: Vec<ClusterBlock>,
    /// `Z^{-1} T Z` is block diagonal.
    pub z: CMatrix,
    pub z_inv: CMatrix,
    /// `||A||`, the scale every threshold is relative to.
    pub scale: f64,
}

/// Result of the nilpotent staircase (Kublanovskaya) reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct Staircase {
    /// `increments[j]` is the number of Jordan blocks of size `> j`.
    pub increments: Vec<usize>,
    /// Dimension of the generalized kernel found.
    pub nilpotent_dim: usize,
    /// Some singular value landed within a factor 2 of the threshold.
    pub ambiguous: bool,
}

impl Staircase {
    /// Jordan block sizes, descending.
    pub fn block_sizes(&self) -> Result<Vec<usize>> {
        let inc = &self.increments;
        if inc.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::IllConditioned(format!(
                "kernel increments {inc:?} are not monotone"
            )));
        }
        let mut sizes = Vec::new();
        for j in (0..inc.len()).rev() {
            let next = inc.get(j + 1).copied().unwrap_or(0);
            for _ in 0..inc[j] - next {
                sizes.push(j + 1);
            }
        }
        Ok(sizes)
    }
}

/// Staircase reduction of an (approximately) nilpotent matrix: repeatedly
/// split off the numerical kernel and compress to its orthogonal complement.
/// Each step is unitary, so no powers of `n` are ever formed.
pub fn staircase(n: &CMatrix, threshold: f64) -> Staircase {
    let mut k = n.clone();
    let mut increments = Vec::new();
    let mut ambiguous = false;
    let mut total = 0;
    while k.nrows() > 0 {
        let (null, range, sv) = kernel_split(&k, threshold);
        if sv.iter().any(|&s| s > 0.5 * threshold && s <= 2.0 * threshold) {
            ambiguous = true;
        }
        let d = null.ncols();
        if d == 0 {
            break;
        }
        increments.push(d);
        total += d;
        k = range.adjoint() * &k * &range;
    }
    Staircase {
        increments,
        nilpotent_dim: total,
        ambiguous,
    }
}

/// Rank threshold used inside a cluster of `size` eigenvalues.
pub(crate) fn cluster_threshold(scale: f64, size: usize, tol: &Tolerances) -> f64 {
    tol.tol_cluster * scale * size.max(1) as f64
}

fn widened_radius(scale: f64, n: usize, m: usize, tol: &Tolerances) -> f64 {
    let scatter = 4.0 * (n as f64 * tol.tol_zero.max(EPS)).powf(1.0 / m as f64);
    scale * tol.tol_cluster.max(scatter)
}

/// Swaps diagonal entries `k` and `k + 1` of upper triangular `t` by a
/// Givens rotation, updating the Schur vectors if given.
fn swap_adjacent(t: &mut CMatrix, q: Option<&mut CMatrix>, k: usize) {
    let a = t[(k, k)];
    let b = t[(k + 1, k + 1)];
    let cpl = t[(k, k + 1)];
    let d = b - a;
    let norm = (cpl.norm_sqr() + d.norm_sqr()).sqrt();
    if norm == 0.0 {
        return;
    }
    // first column is the eigenvector of the 2x2 block for eigenvalue b
    let x0 = cpl / norm;
    let x1 = d / norm;
    let n = t.nrows();
    // t <- G^* t on rows k, k+1
    for j in 0..n {
        let u = t[(k, j)];
        let v = t[(k + 1, j)];
        t[(k, j)] = x0.conj() * u + x1.conj() * v;
        t[(k + 1, j)] = -x1 * u + x0 * v;
    }
    // t <- t G on columns k, k+1
    for i in 0..n {
        let u = t[(i, k)];
        let v = t[(i, k + 1)];
        t[(i, k)] = u * x0 + v * x1;
        t[(i, k + 1)] = -u * x1.conj() + v * x0.conj();
    }
    t[(k + 1, k)] = r(0.0);
    if let Some(q) = q {
        for i in 0..n {
            let u = q[(i, k)];
            let v = q[(i, k + 1)];
            q[(i, k)] = u * x0 + v * x1;
            q[(i, k + 1)] = -u * x1.conj() + v * x0.conj();
        }
    }
}

/// Stable bubble reordering of the diagonal of `t` by ascending `keys`.
fn reorder(t: &mut CMatrix, mut q: Option<&mut CMatrix>, keys: &mut [usize]) {
    let n = keys.len();
    for pass in 0..n {
        let mut swapped = false;
        for k in 0..n - 1 - pass.min(n - 1) {
            if keys[k] > keys[k + 1] {
                swap_adjacent(t, q.as_deref_mut(), k);
                keys.swap(k, k + 1);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
}

/// Solves `T11 Y - Y T22 = C` for upper triangular `T11`, `T22` with
/// disjoint diagonals.
pub(crate) fn triangular_sylvester(t11: &CMatrix, t22: &CMatrix, rhs: &CMatrix) -> CMatrix {
    let p = t11.nrows();
    let q = t22.nrows();
    let mut y = CMatrix::zeros(p, q);
    for j in 0..q {
        let mut col: Vec<Complex64> = (0..p).map(|i| rhs[(i, j)]).collect();
        for l in 0..j {
            let coupling = t22[(l, j)];
            if coupling != r(0.0) {
                for (i, c) in col.iter_mut().enumerate() {
                    *c += y[(i, l)] * coupling;
                }
            }
        }
        let shift = t22[(j, j)];
        for i in (0..p).rev() {
            let mut acc = col[i];
            for k in i + 1..p {
                acc -= t11[(i, k)] * y[(k, j)];
            }
            y[(i, j)] = acc / (t11[(i, i)] - shift);
        }
    }
    y
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }
    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }
    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[b.max(a)] = a.min(b);
        }
    }
}

/// True when the eigenvalues at `members` form a numerically nilpotent block
/// about their mean, judged at the `tol_zero` scale.
fn is_nilpotent_group(t: &CMatrix, members: &[usize], scale: f64, tol: &Tolerances) -> Result<bool> {
    let n = t.nrows();
    let mut work = t.clone();
    let mut keys: Vec<usize> = (0..n).map(|i| usize::from(!members.contains(&i))).collect();
    reorder(&mut work, None, &mut keys);
    let m = members.len();
    let block = work.view((0, 0), (m, m)).into_owned();
    let mean = block.trace() / r(m as f64);
    let shifted = &block - identity(m) * mean;
    let sc = staircase(&shifted, tol.tol_zero * scale * m as f64);
    if sc.ambiguous {
        return Err(Error::IllConditioned(format!(
            "rank decision for a candidate cluster of size {m} is within a factor 2 of the threshold"
        )));
    }
    Ok(sc.nilpotent_dim == m)
}

fn cluster_diagonal(t: &CMatrix, scale: f64, tol: &Tolerances) -> Result<Vec<Vec<usize>>> {
    let n = t.nrows();
    let eig: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let base = tol.tol_cluster * scale;
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push(((eig[i] - eig[j]).norm(), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut uf = UnionFind::new(n);
    for &(d, i, j) in &edges {
        if d <= base {
            uf.union(i, j);
        }
    }
    let mut base_groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = uf.find(i);
        if slot[root] == usize::MAX {
            slot[root] = base_groups.len();
            base_groups.push(Vec::new());
        }
        base_groups[slot[root]].push(i);
    }

    // candidate merges: components at the loosest radius, split at their
    // longest link until each piece is nilpotent about its mean
    let ev = &eig;
    let gap = |ga: &[usize], gb: &[usize]| {
        ga.iter()
            .flat_map(|&i| gb.iter().map(move |&j| (ev[i] - ev[j]).norm()))
            .fold(f64::INFINITY, f64::min)
    };
    let k = base_groups.len();
    let mut links = Vec::new();
    for x in 0..k {
        for y in x + 1..k {
            links.push((gap(&base_groups[x], &base_groups[y]), x, y));
        }
    }
    links.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let loosest = widened_radius(scale, n, n, tol);
    let mut tree = UnionFind::new(k);
    let mut mst = Vec::new();
    for &(d, x, y) in &links {
        if d <= loosest && tree.find(x) != tree.find(y) {
            tree.union(x, y);
            mst.push((d, x, y));
        }
    }
    let mut pending: Vec<(Vec<usize>, Vec<(f64, usize, usize)>)> = Vec::new();
    for x in 0..k {
        if tree.find(x) == x {
            let nodes: Vec<usize> = (0..k).filter(|&y| tree.find(y) == x).collect();
            let edges_in: Vec<_> = mst.iter().copied().filter(|e| tree.find(e.1) == x).collect();
            pending.push((nodes, edges_in));
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    while let Some((nodes, tree_edges)) = pending.pop() {
        let members: Vec<usize> = nodes.iter().flat_map(|&x| base_groups[x].iter().copied()).collect();
        if nodes.len() == 1 {
            groups.push(members);
            continue;
        }
        let longest = tree_edges.iter().copied().fold(0.0, |m: f64, e| m.max(e.0));
        if longest <= widened_radius(scale, n, members.len(), tol) && is_nilpotent_group(t, &members, scale, tol)? {
            groups.push(members);
            continue;
        }
        // cut the longest link
        let cut = tree_edges
            .iter()
            .position(|e| e.0 == longest)
            .expect("a tree on two or more nodes has an edge");
        let rest: Vec<_> = tree_edges
            .iter()
            .enumerate()
            .filter(|&(idx, _)| idx != cut)
            .map(|(_, &e)| e)
            .collect();
        let mut sub = UnionFind::new(k);
        for &(_, x, y) in &rest {
            sub.union(x, y);
        }
        let side_root = sub.find(tree_edges[cut].1);
        let (left, right): (Vec<usize>, Vec<usize>) = nodes.iter().partition(|&&x| sub.find(x) == side_root);
        let (left_edges, right_edges): (Vec<_>, Vec<_>) = rest.into_iter().partition(|e| sub.find(e.1) == side_root);
        pending.push((right, right_edges));
        pending.push((left, left_edges));
    }
    groups.sort_by_key(|g| g[0]);

    // ambiguity: two surviving clusters close to the radius that separated them
    for (x, ga) in groups.iter().enumerate() {
        for gb in &groups[x + 1..] {
            let eig = &eig;
            let d = ga
                .iter()
                .flat_map(|&i| gb.iter().map(move |&j| (eig[i] - eig[j]).norm()))
                .fold(f64::INFINITY, f64::min);
            if d <= 2.0 * base {
                return Err(Error::IllConditioned(format!(
                    "eigenvalue clusters at distance {d:.3e} are within a factor 2 of the clustering radius {base:.3e}"
                )));
            }
            let m = ga.len() + gb.len();
            let wide = widened_radius(scale, n, m, tol);
            if d <= 2.0 * wide {
                let mut joint = ga.clone();
                joint.extend(gb);
                if is_nilpotent_group(t, &joint, scale, tol)? {
                    return Err(Error::IllConditioned(format!(
                        "defective eigenvalue cluster spreads to {d:.3e}, near the radius {wide:.3e}"
                    )));
                }
            }
        }
    }
    Ok(groups)
}

/// Complex Schur form. The QR iteration deflates on a test relative to the
/// diagonal, which can stall when eigenvalues sit at zero, so on failure it
/// is retried on `a + sigma I` and the shift removed afterwards.
fn schur(a: &CMatrix, scale: f64) -> Result<(CMatrix, CMatrix)> {
    let n = a.nrows();
    for shift in [c(0.0, 0.0), c(1.0, 0.0), c(0.7, 0.7), c(-1.3, 0.4)] {
        let sigma = shift * scale;
        let shifted = a + identity(n) * sigma;
        if let Some(s) = Schur::try_new(shifted, EPS, 100_000) {
            let (q, t) = s.unpack();
            return Ok((q, t - identity(n) * sigma));
        }
    }
    Err(Error::IllConditioned("Schur iteration did not converge".into()))
}

impl SpectralDecomposition {
    pub fn new(a: &CMatrix, tol: &Tolerances) -> Result<Self> {
        check_matrix(a)?;
        tol.validate()?;
        let n = a.nrows();
        let scale = op_norm(a);
        if scale == 0.0 {
            return Ok(Self {
                q: identity(n),
                t: CMatrix::zeros(n, n),
                clusters: vec![ClusterBlock {
                    center: r(0.0),
                    start: 0,
                    size: n,
                }],
                z: identity(n),
                z_inv: identity(n),
                scale,
            });
        }
        let (mut q, mut t) = schur(a, scale)?;
        for j in 0..n {
            for i in j + 1..n {
                if t[(i, j)].norm() > 1e-8 * scale {
                    return Err(Error::IllConditioned(
                        "Schur factor is not triangular".into(),
                    ));
                }
                t[(i, j)] = r(0.0);
            }
        }

        let groups = cluster_diagonal(&t, scale, tol)?;
        // order clusters by mean eigenvalue, real part first
        let mut order: Vec<(Complex64, usize)> = groups
            .iter()
            .enumerate()
            .map(|(g, idx)| {
                let sum: Complex64 = idx.iter().map(|&i| t[(i, i)]).sum();
                (sum / r(idx.len() as f64), g)
            })
            .collect();
        order.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));
        let mut rank_of_group = vec![0; groups.len()];
        for (rank, &(_, g)) in order.iter().enumerate() {
            rank_of_group[g] = rank;
        }
        let mut keys = vec![0; n];
        for (g, idx) in groups.iter().enumerate() {
            for &i in idx {
                keys[i] = rank_of_group[g];
            }
        }
        reorder(&mut t, Some(&mut q), &mut keys);

        let mut clusters = Vec::with_capacity(groups.len());
        let mut start = 0;
        for rank in 0..groups.len() {
            let size = keys.iter().filter(|&&k| k == rank).count();
            let trace: Complex64 = (start..start + size).map(|i| t[(i, i)]).sum();
            clusters.push(ClusterBlock {
                center: trace / r(size as f64),
                start,
                size,
            });
            start += size;
        }

        // block diagonalize: eliminate the coupling of each cluster to the trailing part
        let mut z = identity(n);
        let mut z_inv = identity(n);
        let mut tcur = t.clone();
        for cl in &clusters {
            let e = cl.start + cl.size;
            if e == n {
                break;
            }
            let t11 = tcur.view((cl.start, cl.start), (cl.size, cl.size)).into_owned();
            let t22 = tcur.view((e, e), (n - e, n - e)).into_owned();
            let t12 = tcur.view((cl.start, e), (cl.size, n - e)).into_owned();
            let y = triangular_sylvester(&t11, &t22, &(-t12));
            if y.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(Error::IllConditioned(
                    "spectral separation underflow in block diagonalization".into(),
                ));
            }
            let mut step = identity(n);
            step.view_mut((cl.start, e), (cl.size, n - e)).copy_from(&y);
            let mut step_inv = identity(n);
            step_inv.view_mut((cl.start, e), (cl.size, n - e)).copy_from(&(-&y));
            z = &z * &step;
            z_inv = &step_inv * &z_inv;
            tcur.view_mut((cl.start, e), (cl.size, n - e)).fill(r(0.0));
        }

        Ok(Self {
            q,
            t,
            clusters,
            z,
            z_inv,
            scale,
        })
    }

    pub fn eigen_clusters(&self) -> Vec<EigenCluster> {
        self.clusters
            .iter()
            .map(|c| EigenCluster {
                value: c.center,
                multiplicity: c.size,
            })
            .collect()
    }

    /// Diagonal block of the Schur factor for cluster `k`: the operator
    /// restricted to its generalized eigenspace, in an orthonormal basis.
    pub fn block(&self, k: usize) -> CMatrix {
        let cl = &self.clusters[k];
        self.t.view((cl.start, cl.start), (cl.size, cl.size)).into_owned()
    }

    /// Columns spanning the generalized eigenspace of cluster `k` and the
    /// matching rows of the inverse, so that `right * A * left = block(k)`.
    pub fn cluster_basis(&self, k: usize) -> (CMatrix, CMatrix) {
        let cl = &self.clusters[k];
        let left = &self.q * self.z.columns(cl.start, cl.size);
        let right = self.z_inv.rows(cl.start, cl.size) * self.q.adjoint();
        (left, right)
    }

    /// Riesz idempotent of cluster `k`.
    pub fn projector(&self, k: usize) -> CMatrix {
        let (left, right) = self.cluster_basis(k);
        left * right
    }

    /// Staircase of the nilpotent part of cluster `k`.
    pub fn cluster_staircase(&self, k: usize, tol: &Tolerances) -> Staircase {
        let cl = &self.clusters[k];
        let shifted = self.block(k) - identity(cl.size) * cl.center;
        staircase(&shifted, cluster_threshold(self.scale, cl.size, tol))
    }
}

/// Eigenvalue clusters with multiplicities, ordered by real then imaginary
/// part of the cluster mean.
pub fn eig(m: &CMatrix, tol: &Tolerances) -> Result<Vec<EigenCluster>> {
    Ok(SpectralDecomposition::new(m, tol)?.eigen_clusters())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{c, from_real_rows, jordan_block, max_abs_diff};

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn eig_examples() {
        let tol = Tolerances::default();
        let e = eig(&from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]), &tol).unwrap();
        assert_eq!(e.len(), 2);
        assert!(close(e[0].value, r(1.0), 1e-14) && e[0].multiplicity == 1);
        assert!(close(e[1].value, r(2.0), 1e-14) && e[1].multiplicity == 1);

        let e = eig(&from_real_rows(&[&[1.0, 1.0], &[0.0, -0.5]]), &tol).unwrap();
        assert_eq!(e.len(), 2);
        assert!(close(e[0].value, r(-0.5), 1e-14));
        assert!(close(e[1].value, r(1.0), 1e-14));

        let e = eig(&jordan_block(3, r(0.5)), &tol).unwrap();
        assert_eq!(e, vec![EigenCluster { value: r(0.5), multiplicity: 3 }]);
    }

    #[test]
    fn eig_of_zero_and_scalar() {
        let tol = Tolerances::default();
        let e = eig(&CMatrix::zeros(3, 3), &tol).unwrap();
        assert_eq!(e[0].multiplicity, 3);
        let e = eig(&(identity(4) * c(0.0, 2.0)), &tol).unwrap();
        assert_eq!(e.len(), 1);
        assert!(close(e[0].value, c(0.0, 2.0), 1e-14));
    }

    #[test]
    fn eig_flags_near_threshold_pairs() {
        let tol = Tolerances::default();
        // distance 1.5e-8 sits between the radius 1e-8 and twice the radius
        let m = from_real_rows(&[&[1.0, 0.0], &[0.0, 1.0 + 1.5e-8]]);
        assert!(matches!(eig(&m, &tol), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn swap_preserves_similarity() {
        let a = from_real_rows(&[&[1.0, 3.0, 2.0], &[0.0, 2.0, -1.0], &[0.0, 0.0, 3.0]]);
        let mut t = a.clone();
        let mut q = identity(3);
        let mut keys = vec![2, 1, 0];
        reorder(&mut t, Some(&mut q), &mut keys);
        assert!(max_abs_diff(&(&q * &t * q.adjoint()), &a) < 1e-13);
        assert!(close(t[(0, 0)], r(3.0), 1e-13));
        assert!(close(t[(2, 2)], r(1.0), 1e-13));
    }

    #[test]
    fn projector_resolves_identity() {
        let tol = Tolerances::default();
        let a = from_real_rows(&[&[1.0, 2.0, 0.0], &[0.0, 1.0, 5.0], &[0.0, 0.0, -2.0]]);
        let sd = SpectralDecomposition::new(&a, &tol).unwrap();
        assert_eq!(sd.clusters.len(), 2);
        let sum = sd.projector(0) + sd.projector(1);
        assert!(max_abs_diff(&sum, &identity(3)) < 1e-12);
        assert!(max_abs_diff(&(sd.projector(0) * sd.projector(1)), &CMatrix::zeros(3, 3)) < 1e-12);
    }

    #[test]
    fn staircase_counts_jordan_blocks() {
        // J_3(0) + J_1(0) + J_2(0)
        let n = crate::matrix::direct_sum(&[
            jordan_block(3, r(0.0)),
            jordan_block(1, r(0.0)),
            jordan_block(2, r(0.0)),
        ]);
        let sc = staircase(&n, 1e-10);
        assert_eq!(sc.increments, vec![3, 2, 1]);
        assert_eq!(sc.block_sizes().unwrap(), vec![3, 2, 1]);
        assert_eq!(sc.nilpotent_dim, 6);
    }

    #[test]
    fn triangular_sylvester_solves() {
        let t11 = from_real_rows(&[&[1.0, 2.0], &[0.0, 3.0]]);
        let t22 = from_real_rows(&[&[-1.0, 1.0], &[0.0, -2.0]]);
        let rhs = from_real_rows(&[&[1.0, 0.0], &[2.0, 5.0]]);
        let y = triangular_sylvester(&t11, &t22, &rhs);
        assert!(max_abs_diff(&(&t11 * &y - &y * &t22), &rhs) < 1e-13);
    }
}
