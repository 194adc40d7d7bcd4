//! Zero-level sets of scalar fields on a rectangular lattice (marching squares).

use serde::Serialize;

pub type Point = [f64; 2];

/// Values `f(xs[i], ys[j])` stored at `values[i * ys.len() + j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub values: Vec<f64>,
}

impl Lattice {
    pub fn sample<F: Fn(f64, f64) -> f64>(xs: Vec<f64>, ys: Vec<f64>, f: F) -> Self {
        let values = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self { xs, ys, values }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ys.len() + j]
    }

    fn cells(&self) -> usize {
        self.xs.len().saturating_sub(1) * self.ys.len().saturating_sub(1)
    }
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
    /// Index of the lattice cell holding the segment.
    pub cell: usize,
}

fn crossing(p: Point, q: Point, fp: f64, fq: f64) -> Point {
    let t = if fp == fq { 0.5 } else { fp / (fp - fq) };
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Zero-crossing segments, cell by cell. Saddle cells are resolved with
/// the cell-centre average.
pub fn segments(l: &Lattice) -> Vec<Segment> {
    let (nx, ny) = (l.xs.len(), l.ys.len());
    let mut out = Vec::new();
    if nx < 2 || ny < 2 {
        return out;
    }
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let cell = i * (ny - 1) + j;
            // corners counter-clockwise from (i, j)
            let p = [
                [l.xs[i], l.ys[j]],
                [l.xs[i + 1], l.ys[j]],
                [l.xs[i + 1], l.ys[j + 1]],
                [l.xs[i], l.ys[j + 1]],
            ];
            let f = [
                l.at(i, j),
                l.at(i + 1, j),
                l.at(i + 1, j + 1),
                l.at(i, j + 1),
            ];
            if f.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let pos: Vec<bool> = f.iter().map(|&v| v > 0.0).collect();
            let edges: Vec<Point> = (0..4)
                .filter(|&e| pos[e] != pos[(e + 1) % 4])
                .map(|e| crossing(p[e], p[(e + 1) % 4], f[e], f[(e + 1) % 4]))
                .collect();
            match edges.len() {
                2 => out.push(Segment {
                    a: edges[0],
                    b: edges[1],
                    cell,
                }),
                4 => {
                    // edges are ordered 0-1, 1-2, 2-3, 3-0
                    let centre_pos = f.iter().sum::<f64>() > 0.0;
                    let (s, t) = if centre_pos == pos[0] {
                        ((0, 1), (2, 3))
                    } else {
                        ((0, 3), (1, 2))
                    };
                    for (a, b) in [s, t] {
                        out.push(Segment {
                            a: edges[a],
                            b: edges[b],
                            cell,
                        });
                    }
                }
                _ => {}
            }
        }
    }
    // a crossing exactly on a lattice node yields zero-length pieces
    let tiny = 1e-9 * ((l.xs[1] - l.xs[0]).abs() + (l.ys[1] - l.ys[0]).abs());
    out.retain(|s| !same(s.a, s.b, tiny));
    out
}

fn same(a: Point, b: Point, tol: f64) -> bool {
    (a[0] - b[0]).abs() <= tol && (a[1] - b[1]).abs() <= tol
}

/// Chains segments into polylines by joining shared endpoints.
pub fn polylines(segs: &[Segment]) -> Vec<Vec<Point>> {
    let scale = segs
        .iter()
        .flat_map(|s| [s.a, s.b])
        .fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let tol = 1e-12 * scale;
    let mut used = vec![false; segs.len()];
    let mut lines = Vec::new();
    for start in 0..segs.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut line = std::collections::VecDeque::from([segs[start].a, segs[start].b]);
        loop {
            let mut grew = false;
            for (k, s) in segs.iter().enumerate() {
                if used[k] {
                    continue;
                }
                let (front, back) = (line[0], line[line.len() - 1]);
                let next = if same(s.a, back, tol) {
                    Some((false, s.b))
                } else if same(s.b, back, tol) {
                    Some((false, s.a))
                } else if same(s.a, front, tol) {
                    Some((true, s.b))
                } else if same(s.b, front, tol) {
                    Some((true, s.a))
                } else {
                    None
                };
                if let Some((at_front, p)) = next {
                    used[k] = true;
                    grew = true;
                    if at_front {
                        line.push_front(p);
                    } else {
                        line.push_back(p);
                    }
                }
            }
            if !grew {
                break;
            }
        }
        lines.push(line.into_iter().collect());
    }
    lines
}

fn segment_intersection(s: &Segment, t: &Segment) -> Option<Point> {
    let d1 = [s.b[0] - s.a[0], s.b[1] - s.a[1]];
    let d2 = [t.b[0] - t.a[0], t.b[1] - t.a[1]];
    let den = d1[0] * d2[1] - d1[1] * d2[0];
    if den == 0.0 {
        return None;
    }
    let w = [t.a[0] - s.a[0], t.a[1] - s.a[1]];
    let u = (w[0] * d2[1] - w[1] * d2[0]) / den;
    let v = (w[0] * d1[1] - w[1] * d1[0]) / den;
    let eps = 1e-9;
    ((-eps..=1.0 + eps).contains(&u) && (-eps..=1.0 + eps).contains(&v))
        .then(|| [s.a[0] + u * d1[0], s.a[1] + u * d1[1]])
}

/// Crossings between segments of two families that share a lattice cell.
/// A crossing on a cell boundary may be reported twice.
pub fn intersections(first: &[Segment], second: &[Segment], cells: usize) -> Vec<Point> {
    let mut by_cell: Vec<Vec<&Segment>> = vec![Vec::new(); cells];
    for s in second {
        by_cell[s.cell].push(s);
    }
    first
        .iter()
        .flat_map(|s| {
            by_cell[s.cell]
                .iter()
                .filter_map(move |t| segment_intersection(s, t))
        })
        .collect()
}

/// Both zero sets on one lattice plus their crossings.
pub fn zero_sets(a: &Lattice, b: &Lattice) -> (Vec<Segment>, Vec<Segment>, Vec<Point>) {
    let sa = segments(a);
    let sb = segments(b);
    let pts = intersections(&sa, &sb, a.cells());
    (sa, sb, pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_contour_is_closed() {
        let g = linspace(-2.0, 2.0, 41);
        let l = Lattice::sample(g.clone(), g, |x, y| x * x + y * y - 1.0);
        let lines = polylines(&segments(&l));
        assert_eq!(
            lines.len(),
            1,
            "{:?}",
            lines
                .iter()
                .map(|l| (l.len(), l[0], l[l.len() - 1]))
                .collect::<Vec<_>>()
        );
        let line = &lines[0];
        assert!(same(line[0], line[line.len() - 1], 1e-9));
        for p in line {
            assert!(((p[0].hypot(p[1])) - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn axes_cross_at_origin() {
        let g = linspace(-1.0, 1.0, 20);
        let a = Lattice::sample(g.clone(), g.clone(), |x, _| x);
        let b = Lattice::sample(g.clone(), g, |_, y| y);
        let (_, _, pts) = zero_sets(&a, &b);
        assert!(!pts.is_empty());
        for p in pts {
            assert!(p[0].abs() < 1e-12 && p[1].abs() < 1e-12);
        }
    }

    #[test]
    fn linear_interpolation_is_exact_for_planes() {
        let g = linspace(0.0, 1.0, 5);
        let l = Lattice::sample(g.clone(), g, |x, y| x + 2.0 * y - 0.9);
        for s in segments(&l) {
            for p in [s.a, s.b] {
                assert!((p[0] + 2.0 * p[1] - 0.9).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn no_crossing_no_segments() {
        let g = linspace(0.0, 1.0, 4);
        assert!(segments(&Lattice::sample(g.clone(), g, |_, _| 1.0)).is_empty());
    }
}
