/// Geometric nested dissection of a graph with vertex coordinates.
///
/// Each level splits the vertex set at the median of its longer bounding-box
/// axis and moves the vertices of the lower half that touch the upper half
/// into a separator, which is numbered last. Returns the elimination order
/// (`order[k]` is the vertex eliminated k-th).
pub fn nested_dissection(coords: &[[f64; 2]], adjacency: &[Vec<usize>], leaf: usize) -> Vec<usize> {
    let n = coords.len();
    let mut order = Vec::with_capacity(n);
    // side[v]: 0 unassigned, 1 lower half, 2 upper half of the current split
    let mut side = vec![0u8; n];
    let mut stack: Vec<(Vec<usize>, Option<Vec<usize>>)> = vec![((0..n).collect(), None)];
    // Iterative post-order: a frame without a separator is split; a frame
    // carrying one emits the separator after both halves were emitted.
    while let Some((set, sep)) = stack.pop() {
        if let Some(sep) = sep {
            order.extend(sep);
            continue;
        }
        if set.len() <= leaf.max(1) {
            order.extend(set);
            continue;
        }
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for &v in &set {
            for d in 0..2 {
                lo[d] = lo[d].min(coords[v][d]);
                hi[d] = hi[d].max(coords[v][d]);
            }
        }
        let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
        let mut sorted = set;
        sorted.sort_by(|&a, &b| coords[a][axis].total_cmp(&coords[b][axis]).then(a.cmp(&b)));
        let mid = sorted.len() / 2;
        let (lower, upper) = sorted.split_at(mid);
        for &v in lower {
            side[v] = 1;
        }
        for &v in upper {
            side[v] = 2;
        }
        let mut left = Vec::with_capacity(lower.len());
        let mut separator = Vec::new();
        for &v in lower {
            if adjacency[v].iter().any(|&w| side[w] == 2) {
                separator.push(v);
            } else {
                left.push(v);
            }
        }
        let right = upper.to_vec();
        for &v in lower.iter().chain(upper) {
            side[v] = 0;
        }
        stack.push((Vec::new(), Some(separator)));
        stack.push((right, None));
        stack.push((left, None));
    }
    order
}
