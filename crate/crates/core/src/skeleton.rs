//! Crack skeletons and their keypoint/minimal-edge topology.
//!
//! Thinning runs the two Zhang–Suen subiterations to a fixed point, then
//! strips 4-connected staircase corners so every interior pixel of the
//! result has exactly two 8-neighbours. Deletions are applied one pixel at a
//! time and only when the pixel is 8-simple, which keeps the number of
//! 8-connected components (and holes) unchanged.
//!
//! Graph extraction classifies pixels by 8-neighbour count: fewer than two
//! is an end point, more than two a branch point. Mutually adjacent branch
//! pixels form a single junction.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{Mask, Pixel, RasterMeta};

/// Neighbour ring P2..P9 (N, NE, E, SE, S, SW, W, NW) as `(drow, dcol)`.
const RING: [(isize, isize); 8] = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];

fn ring(mask: &Mask, row: usize, col: usize) -> [bool; 8] {
    let mut out = [false; 8];
    for (i, (dr, dc)) in RING.iter().enumerate() {
        out[i] = mask.get_signed(row as isize + dr, col as isize + dc).unwrap_or(false);
    }
    out
}

/// Count of 0 -> 1 transitions around the ring.
fn transitions(n: &[bool; 8]) -> usize {
    (0..8).filter(|&i| !n[i] && n[(i + 1) % 8]).count()
}

/// Yokoi 8-connectivity number; a foreground pixel is 8-simple iff this is 1.
fn connectivity_number(n: &[bool; 8]) -> i32 {
    // Yokoi order starting at E counter-clockwise: E, NE, N, NW, W, SW, S, SE.
    let x = [n[2], n[1], n[0], n[7], n[6], n[5], n[4], n[3]];
    let nb = |i: usize| 1 - x[i % 8] as i32;
    [0, 2, 4, 6]
        .iter()
        .map(|&k| nb(k) - nb(k) * nb(k + 1) * nb(k + 2))
        .sum()
}

fn is_simple(mask: &Mask, row: usize, col: usize) -> bool {
    connectivity_number(&ring(mask, row, col)) == 1
}

fn zs_candidate(n: &[bool; 8], first: bool) -> bool {
    let b = n.iter().filter(|&&v| v).count();
    if !(2..=6).contains(&b) || transitions(n) != 1 {
        return false;
    }
    let (p2, p4, p6, p8) = (n[0], n[2], n[4], n[6]);
    if first {
        !(p2 && p4 && p6) && !(p4 && p6 && p8)
    } else {
        !(p2 && p4 && p8) && !(p2 && p6 && p8)
    }
}

fn zs_subiteration(mask: &mut Mask, first: bool) -> bool {
    let candidates: Vec<Pixel> = mask
        .set_pixels()
        .into_iter()
        .filter(|p| zs_candidate(&ring(mask, p.row, p.col), first))
        .collect();
    let mut changed = false;
    for p in candidates {
        if is_simple(mask, p.row, p.col) {
            mask.set(p.row, p.col, false);
            changed = true;
        }
    }
    changed
}

/// Zhang–Suen thinning to a fixed point, deletions guarded by 8-simplicity.
pub fn zhang_suen(mask: &Mask) -> Mask {
    let mut out = mask.clone();
    loop {
        let a = zs_subiteration(&mut out, true);
        let b = zs_subiteration(&mut out, false);
        if !a && !b {
            return out;
        }
    }
}

/// Removes simple pixels sitting in the corner of a 4-connected L.
fn remove_staircases(mask: &mut Mask) -> bool {
    let mut changed = false;
    for p in mask.set_pixels() {
        let n = ring(mask, p.row, p.col);
        let (north, east, south, west) = (n[0], n[2], n[4], n[6]);
        let corner = (north && east) || (east && south) || (south && west) || (west && north);
        if corner && is_simple(mask, p.row, p.col) {
            mask.set(p.row, p.col, false);
            changed = true;
        }
    }
    changed
}

/// One-pixel-wide, 8-thin skeleton of a binary mask.
pub fn thin(mask: &Mask) -> Mask {
    let mut out = mask.clone();
    loop {
        out = zhang_suen(&out);
        if !remove_staircases(&mut out) {
            return out;
        }
    }
}

/// A maximal skeleton path between keypoints, or a keypoint-free loop.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalEdge {
    pub pixels: Vec<Pixel>,
    #[serde(default)]
    pub closed: bool,
}

impl MinimalEdge {
    /// Pixels that are not keypoints.
    pub fn interior(&self) -> &[Pixel] {
        if self.closed {
            &self.pixels
        } else if self.pixels.len() <= 2 {
            &[]
        } else {
            &self.pixels[1..self.pixels.len() - 1]
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonGraph {
    pub skeleton: Mask,
    pub end_points: Vec<Pixel>,
    /// One representative pixel per junction.
    pub branch_points: Vec<Pixel>,
    /// Member pixels of each junction, parallel to `branch_points`.
    pub junctions: Vec<Vec<Pixel>>,
    pub edges: Vec<MinimalEdge>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphOptions {
    /// Drop end-point spurs of at most this many pixels (0 disables).
    pub spur_prune_px: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Node {
    End,
    Junction(usize),
}

pub fn extract_graph(skeleton: &Mask) -> Result<SkeletonGraph> {
    let (w, h) = (skeleton.width(), skeleton.height());
    for row in 0..h.saturating_sub(1) {
        for col in 0..w.saturating_sub(1) {
            if skeleton.get(row, col)
                && skeleton.get(row, col + 1)
                && skeleton.get(row + 1, col)
                && skeleton.get(row + 1, col + 1)
            {
                return Err(Error::NotASkeleton { row, col });
            }
        }
    }

    let pixels = skeleton.set_pixels();
    let mut node: Vec<Option<Node>> = vec![None; w * h];
    let idx = |p: Pixel| p.row * w + p.col;
    let mut end_points = Vec::new();
    let mut branch_pixels = Vec::new();
    for &p in &pixels {
        match skeleton.neighbor_count(p) {
            0 | 1 => {
                node[idx(p)] = Some(Node::End);
                end_points.push(p);
            }
            2 => {}
            _ => branch_pixels.push(p),
        }
    }

    // Junctions: 8-connected clusters of branch pixels.
    let mut junctions: Vec<Vec<Pixel>> = Vec::new();
    let mut is_branch = vec![false; w * h];
    for &p in &branch_pixels {
        is_branch[idx(p)] = true;
    }
    for &start in &branch_pixels {
        if node[idx(start)].is_some() {
            continue;
        }
        let id = junctions.len();
        let mut members = vec![start];
        node[idx(start)] = Some(Node::Junction(id));
        let mut i = 0;
        while i < members.len() {
            for q in skeleton.neighbors(members[i]) {
                if is_branch[idx(q)] && node[idx(q)].is_none() {
                    node[idx(q)] = Some(Node::Junction(id));
                    members.push(q);
                }
            }
            i += 1;
        }
        members.sort();
        junctions.push(members);
    }
    let branch_points = junctions.iter().map(|m| junction_representative(m)).collect();

    let same_junction = |a: Pixel, b: Pixel| match (node[idx(a)], node[idx(b)]) {
        (Some(Node::Junction(x)), Some(Node::Junction(y))) => x == y,
        _ => false,
    };
    let link = |a: Pixel, b: Pixel| if a < b { (a, b) } else { (b, a) };

    let mut visited = vec![false; w * h];
    let mut used: BTreeSet<(Pixel, Pixel)> = BTreeSet::new();
    let mut edges = Vec::new();

    let mut keypixels: Vec<Pixel> = pixels.iter().copied().filter(|&p| node[idx(p)].is_some()).collect();
    keypixels.sort();
    for &k in &keypixels {
        let nbrs = skeleton.neighbors(k);
        if nbrs.is_empty() {
            edges.push(MinimalEdge {
                pixels: vec![k],
                closed: false,
            });
            continue;
        }
        for n in nbrs {
            if same_junction(k, n) || used.contains(&link(k, n)) {
                continue;
            }
            if node[idx(n)].is_none() && visited[idx(n)] {
                continue;
            }
            used.insert(link(k, n));
            let mut path = vec![k, n];
            let (mut prev, mut cur) = (k, n);
            while node[idx(cur)].is_none() {
                visited[idx(cur)] = true;
                let next = skeleton
                    .neighbors(cur)
                    .into_iter()
                    .find(|&q| q != prev && !used.contains(&link(cur, q)));
                let Some(q) = next else { break };
                used.insert(link(cur, q));
                path.push(q);
                prev = cur;
                cur = q;
            }
            edges.push(MinimalEdge {
                pixels: path,
                closed: false,
            });
        }
    }

    // Keypoint-free loops.
    for &s in &pixels {
        if node[idx(s)].is_some() || visited[idx(s)] {
            continue;
        }
        let mut path = vec![s];
        visited[idx(s)] = true;
        let mut cur = s;
        while let Some(q) = skeleton.neighbors(cur).into_iter().find(|&q| !visited[idx(q)]) {
            visited[idx(q)] = true;
            path.push(q);
            cur = q;
        }
        edges.push(MinimalEdge {
            pixels: path,
            closed: true,
        });
    }

    Ok(SkeletonGraph {
        skeleton: skeleton.clone(),
        end_points,
        branch_points,
        junctions,
        edges,
    })
}

/// Member closest to the cluster centroid, ties to the lexicographically
/// smallest.
fn junction_representative(members: &[Pixel]) -> Pixel {
    let n = members.len() as f64;
    let cr = members.iter().map(|p| p.row as f64).sum::<f64>() / n;
    let cc = members.iter().map(|p| p.col as f64).sum::<f64>() / n;
    let d = |p: &Pixel| (p.row as f64 - cr).powi(2) + (p.col as f64 - cc).powi(2);
    *members
        .iter()
        .min_by(|a, b| d(a).total_cmp(&d(b)).then(a.cmp(b)))
        .expect("junction has members")
}

/// Extraction with optional spur pruning.
pub fn extract_graph_with(skeleton: &Mask, opts: &GraphOptions) -> Result<SkeletonGraph> {
    let graph = extract_graph(skeleton)?;
    if opts.spur_prune_px == 0 {
        return Ok(graph);
    }
    let mut pruned = skeleton.clone();
    let mut removed = false;
    for e in &graph.edges {
        let (first, last) = (e.pixels[0], *e.pixels.last().expect("non-empty edge"));
        let is_end = |p: Pixel| graph.skeleton.neighbor_count(p) < 2;
        let is_junction = |p: Pixel| graph.skeleton.neighbor_count(p) > 2;
        let spur = !e.closed
            && e.pixels.len() - 1 <= opts.spur_prune_px
            && ((is_end(first) && is_junction(last)) || (is_end(last) && is_junction(first)));
        if spur {
            for &p in &e.pixels {
                if !is_junction(p) {
                    pruned.set(p.row, p.col, false);
                }
            }
            removed = true;
        }
    }
    if !removed {
        return Ok(graph);
    }
    extract_graph(&thin(&pruned))
}

/// JSON form of a graph: grid placement, keypoints and ordered edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub meta: RasterMeta,
    pub end_points: Vec<Pixel>,
    pub branch_points: Vec<Pixel>,
    pub junctions: Vec<Vec<Pixel>>,
    pub edges: Vec<MinimalEdge>,
}

impl From<&SkeletonGraph> for GraphDocument {
    fn from(g: &SkeletonGraph) -> Self {
        GraphDocument {
            meta: g.skeleton.meta().clone(),
            end_points: g.end_points.clone(),
            branch_points: g.branch_points.clone(),
            junctions: g.junctions.clone(),
            edges: g.edges.clone(),
        }
    }
}

impl GraphDocument {
    pub fn into_graph(self) -> Result<SkeletonGraph> {
        let mut skeleton = Mask::empty(self.meta.clone());
        let (w, h) = (self.meta.width, self.meta.height);
        let all = self
            .edges
            .iter()
            .flat_map(|e| e.pixels.iter())
            .chain(self.end_points.iter())
            .chain(self.junctions.iter().flatten());
        for p in all {
            if p.row >= h || p.col >= w {
                return Err(Error::OutOfBounds {
                    u: p.col as f64,
                    v: p.row as f64,
                    width: w,
                    height: h,
                });
            }
            skeleton.set(p.row, p.col, true);
        }
        Ok(SkeletonGraph {
            skeleton,
            end_points: self.end_points,
            branch_points: self.branch_points,
            junctions: self.junctions,
            edges: self.edges,
        })
    }
}
