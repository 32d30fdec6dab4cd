//! Axis-aligned space-partitioning tree for neighbor queries.
//!
//! Built once per cloud and shared by the projection, resampling, and graph
//! construction stages. Query results are deterministic regardless of build
//! or traversal details: radius queries come back in ascending point-index
//! order, and k-nearest results are the k smallest points under the total
//! order (distance, index), returned ascending.

use crate::cloud::{dist2, PointCloud};

/// Points per leaf before a node stops splitting.
const LEAF_SIZE: usize = 12;

enum Node {
    /// Children: `left` is always `self + 1` in the node arena, so only the
    /// right child index is stored. Every point in the left subtree has
    /// `coord[axis] <= value`; every point in the right has `>= value`.
    Split { axis: usize, value: f64, right: usize },
    /// Range into the permuted index array.
    Leaf { start: usize, end: usize },
}

/// Immutable kd-tree over a borrowed cloud.
pub struct KdTree<'a> {
    cloud: &'a PointCloud,
    nodes: Vec<Node>,
    order: Vec<u32>,
}

impl<'a> KdTree<'a> {
    /// Builds the tree. Cost is O(n log² n); empty clouds yield a tree whose
    /// queries all return nothing.
    pub fn build(cloud: &'a PointCloud) -> Self {
        let mut order: Vec<u32> = (0..cloud.len() as u32).collect();
        let mut nodes = Vec::new();
        if !order.is_empty() {
            build_recursive(cloud, &mut order, 0, &mut nodes);
        }
        KdTree { cloud, nodes, order }
    }

    /// All points within the closed ball of radius `radius` around `query`,
    /// as (point index, distance) pairs in ascending index order.
    pub fn within_radius(&self, query: &[f64], radius: f64) -> Vec<(usize, f64)> {
        debug_assert_eq!(query.len(), self.cloud.dim());
        let mut hits = Vec::new();
        if !self.nodes.is_empty() && radius >= 0.0 {
            self.radius_recursive(0, query, radius * radius, &mut hits);
        }
        hits.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        hits.iter().map(|&(i, d2)| (i as usize, d2.sqrt())).collect()
    }

    /// The `k` nearest points to `query` under the total order (distance,
    /// index), ascending. `exclude` removes one point index from
    /// consideration (used for nearest-other-point queries). Returns fewer
    /// than `k` entries only if the cloud runs out of points.
    pub fn k_nearest(
        &self,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
    ) -> Vec<(usize, f64)> {
        debug_assert_eq!(query.len(), self.cloud.dim());
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut best: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        self.knn_recursive(0, query, k, exclude.map(|e| e as u32), &mut best);
        best.iter().map(|&(d2, i)| (i as usize, d2.sqrt())).collect()
    }

    /// Nearest point to `query`, or `None` for an empty cloud.
    pub fn nearest(&self, query: &[f64]) -> Option<(usize, f64)> {
        self.k_nearest(query, 1, None).into_iter().next()
    }

    /// Nearest point to point `i` other than `i` itself.
    pub fn nearest_other(&self, i: usize) -> Option<(usize, f64)> {
        self.k_nearest(self.cloud.point(i), 1, Some(i)).into_iter().next()
    }

    fn radius_recursive(
        &self,
        node: usize,
        query: &[f64],
        r2: f64,
        hits: &mut Vec<(u32, f64)>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &idx in &self.order[start..end] {
                    let d2 = dist2(query, self.cloud.point(idx as usize));
                    if d2 <= r2 {
                        hits.push((idx, d2));
                    }
                }
            }
            Node::Split { axis, value, right } => {
                let delta = query[axis] - value;
                // Left subtree coords are <= value: skip it only when the
                // query is more than r to the right of the plane; mirrored
                // logic for the right subtree.
                if delta * delta <= r2 || delta < 0.0 {
                    self.radius_recursive(node + 1, query, r2, hits);
                }
                if delta * delta <= r2 || delta > 0.0 {
                    self.radius_recursive(right, query, r2, hits);
                }
            }
        }
    }

    fn knn_recursive(
        &self,
        node: usize,
        query: &[f64],
        k: usize,
        exclude: Option<u32>,
        best: &mut Vec<(f64, u32)>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &idx in &self.order[start..end] {
                    if exclude == Some(idx) {
                        continue;
                    }
                    let d2 = dist2(query, self.cloud.point(idx as usize));
                    let cand = (d2, idx);
                    if best.len() < k {
                        let pos = best.partition_point(|&b| b < cand);
                        best.insert(pos, cand);
                    } else if cand < best[k - 1] {
                        let pos = best.partition_point(|&b| b < cand);
                        best.insert(pos, cand);
                        best.pop();
                    }
                }
            }
            Node::Split { axis, value, right } => {
                let delta = query[axis] - value;
                let (near, far) = if delta <= 0.0 { (node + 1, right) } else { (right, node + 1) };
                self.knn_recursive(near, query, k, exclude, best);
                // Visit the far side unless the current k-th distance already
                // rules out everything beyond the splitting plane.
                if best.len() < k || delta * delta <= best[k - 1].0 {
                    self.knn_recursive(far, query, k, exclude, best);
                }
            }
        }
    }
}

fn build_recursive(
    cloud: &PointCloud,
    order: &mut [u32],
    offset: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf { start: offset, end: offset + order.len() });
        return id;
    }
    // Split along the axis with the widest spread over this subset.
    let dim = cloud.dim();
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for &idx in order.iter() {
        for (a, &c) in cloud.point(idx as usize).iter().enumerate() {
            lo[a] = lo[a].min(c);
            hi[a] = hi[a].max(c);
        }
    }
    let axis = (0..dim)
        .max_by(|&a, &b| (hi[a] - lo[a]).partial_cmp(&(hi[b] - lo[b])).unwrap())
        .unwrap_or(0);
    if hi[axis] - lo[axis] == 0.0 {
        // All points coincide on every axis; splitting cannot help.
        nodes.push(Node::Leaf { start: offset, end: offset + order.len() });
        return id;
    }
    order.sort_unstable_by(|&a, &b| {
        let ca = cloud.point(a as usize)[axis];
        let cb = cloud.point(b as usize)[axis];
        ca.partial_cmp(&cb).unwrap().then(a.cmp(&b))
    });
    let mid = order.len() / 2;
    let value = cloud.point(order[mid] as usize)[axis];
    nodes.push(Node::Split { axis, value, right: 0 });
    let (left, right) = order.split_at_mut(mid);
    build_recursive(cloud, left, offset, nodes);
    let right_id = build_recursive(cloud, right, offset + mid, nodes);
    if let Node::Split { right, .. } = &mut nodes[id] {
        *right = right_id;
    }
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::dist;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(n: usize, dim: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..n * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        PointCloud::from_flat(dim, data).unwrap()
    }

    /// Brute-force oracle for the radius query.
    fn brute_within(cloud: &PointCloud, query: &[f64], radius: f64) -> Vec<(usize, f64)> {
        cloud
            .iter()
            .enumerate()
            .map(|(i, p)| (i, dist(query, p)))
            .filter(|&(_, d)| d <= radius)
            .collect()
    }

    /// Brute-force oracle for k-nearest under the (distance, index) order.
    fn brute_knn(
        cloud: &PointCloud,
        query: &[f64],
        k: usize,
        exclude: Option<usize>,
    ) -> Vec<(usize, f64)> {
        let mut all: Vec<(f64, usize)> = cloud
            .iter()
            .enumerate()
            .filter(|&(i, _)| Some(i) != exclude)
            .map(|(i, p)| (dist2(query, p), i))
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all.truncate(k);
        all.into_iter().map(|(d2, i)| (i, d2.sqrt())).collect()
    }

    #[test]
    fn radius_matches_brute_force() {
        for seed in 0..4 {
            let cloud = random_cloud(300, 3, seed);
            let tree = KdTree::build(&cloud);
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            for _ in 0..50 {
                let q: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.2..1.2)).collect();
                let r = rng.gen_range(0.0..0.8);
                let got = tree.within_radius(&q, r);
                let want = brute_within(&cloud, &q, r);
                assert_eq!(
                    got.iter().map(|&(i, _)| i).collect::<Vec<_>>(),
                    want.iter().map(|&(i, _)| i).collect::<Vec<_>>()
                );
            }
        }
    }

    #[test]
    fn knn_matches_brute_force() {
        for seed in 0..4 {
            let cloud = random_cloud(200, 4, seed);
            let tree = KdTree::build(&cloud);
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            for _ in 0..50 {
                let q: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.2..1.2)).collect();
                let k = rng.gen_range(1..12);
                let got = tree.k_nearest(&q, k, None);
                let want = brute_knn(&cloud, &q, k, None);
                assert_eq!(
                    got.iter().map(|&(i, _)| i).collect::<Vec<_>>(),
                    want.iter().map(|&(i, _)| i).collect::<Vec<_>>()
                );
            }
        }
    }

    #[test]
    fn nearest_other_skips_self() {
        let cloud =
            PointCloud::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![5.0, 0.0]]).unwrap();
        let tree = KdTree::build(&cloud);
        assert_eq!(tree.nearest_other(0), Some((1, 1.0)));
        assert_eq!(tree.nearest_other(2), Some((1, 4.0)));
    }

    #[test]
    fn ties_resolve_to_smaller_index() {
        // Two points equidistant from the query: index order must decide.
        let cloud =
            PointCloud::from_rows(&[vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let tree = KdTree::build(&cloud);
        let got = tree.k_nearest(&[0.0, 0.0], 1, None);
        assert_eq!(got[0].0, 0);
    }

    #[test]
    fn handles_coincident_points() {
        let rows: Vec<Vec<f64>> = (0..40).map(|_| vec![2.0, -1.0]).collect();
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let tree = KdTree::build(&cloud);
        assert_eq!(tree.within_radius(&[2.0, -1.0], 0.0).len(), 40);
        assert_eq!(tree.k_nearest(&[0.0, 0.0], 3, None).len(), 3);
    }

    #[test]
    fn empty_cloud_returns_nothing() {
        let cloud = PointCloud::new(2);
        let tree = KdTree::build(&cloud);
        assert!(tree.within_radius(&[0.0, 0.0], 10.0).is_empty());
        assert!(tree.nearest(&[0.0, 0.0]).is_none());
    }
}
