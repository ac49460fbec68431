//! The implicitly represented infinite tiling roadmap.
//!
//! A vertex is a translated copy of a stored base configuration. The
//! structural fact that makes neighbor enumeration trivial is that the
//! anchored copies of one base configuration are vertices of every
//! base roadmap simultaneously, so from any vertex the graph offers
//! the union, over pivot anchors j, of the j'th roadmap's edges
//! translated to the vertex's j'th anchor position. Nothing here ever
//! evaluates a self-collision predicate: vertices inherit validity
//! from preprocessing, and edges are screened against obstacles using
//! the precomputed swept polygons, translated.

use std::collections::HashMap;

use crate::geometry2d::{Aabb, Point2, Polygon};
use crate::roadmap::{RoadmapBundle, StartAttachment};
use crate::robot::{self, translate, Configuration, Scene};

/// Translation quantum for vertex identity.
pub const EPS_KEY: f64 = 1e-6;

/// Identity of a tiling-roadmap vertex: which stored configuration,
/// and where its head-anchored copy was translated to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileVertex {
    pub id: CfgId,
    pub translation: Point2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CfgId {
    Base(u32),
    Start,
}

/// Quantized vertex identity used to detect revisits on the infinite
/// graph. Equal keys imply realized configurations within
/// m * EPS_KEY * sqrt(2) of each other in the anchor-sum metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexKey {
    pub id: CfgId,
    pub qx: i64,
    pub qy: i64,
}

pub fn canonical_key(v: &TileVertex) -> VertexKey {
    VertexKey {
        id: v.id,
        qx: (v.translation.x / EPS_KEY).round() as i64,
        qy: (v.translation.y / EPS_KEY).round() as i64,
    }
}

/// Multiply-xor hasher for the small fixed-width keys this module
/// hashes in its hot loops; SipHash is overkill there.
#[derive(Default, Clone)]
pub struct KeyHasher(u64);

impl std::hash::Hasher for KeyHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.write_u64(b as u64);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.0 = (self.0 ^ v).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        self.0 ^= self.0 >> 29;
    }

    fn write_i64(&mut self, v: i64) {
        self.write_u64(v as u64);
    }

    fn write_u32(&mut self, v: u32) {
        self.write_u64(v as u64);
    }

    fn write_u8(&mut self, v: u8) {
        self.write_u64(v as u64);
    }

    fn write_usize(&mut self, v: usize) {
        self.write_u64(v as u64);
    }
}

pub type KeyHashBuilder = std::hash::BuildHasherDefault<KeyHasher>;
pub type KeyMap<V> = HashMap<VertexKey, V, KeyHashBuilder>;

/// An edge of the tiling roadmap: a base-roadmap local plan placed at
/// a concrete pivot position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileEdge {
    /// Pivot anchor (1-based); both endpoint configurations hold this
    /// anchor at `translation`.
    pub anchor: usize,
    pub kind: EdgeKind,
    /// Where the pivot anchor sits in the plane; the stored local
    /// plan's geometry is translated by this.
    pub translation: Point2,
    /// False when the edge is traversed from the plan's `b` side to
    /// its `a` side.
    pub forward: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Index into the edge list of the base roadmap for `anchor`.
    Base(u32),
    /// Index into the start attachment's edge list.
    Attachment(u32),
}

/// Read-only view of the tiling roadmap induced by a bundle, with an
/// optional start attachment grafted in.
pub struct TilingGraph<'a> {
    pub bundle: &'a RoadmapBundle,
    pub start: Option<&'a StartAttachment>,
    /// Keys of vertices that have attachment edges leading back to the
    /// start, with the edge indices.
    start_backlinks: KeyMap<Vec<u32>>,
    /// Flat R^{2m} embeddings of the head-anchored base configs; a
    /// vertex embedding is one of these plus its translation, which
    /// keeps the search loop free of per-neighbor allocation.
    base_embeds: Vec<f64>,
    start_embed: Vec<f64>,
    dim: usize,
}

impl<'a> TilingGraph<'a> {
    pub fn new(bundle: &'a RoadmapBundle, start: Option<&'a StartAttachment>) -> Self {
        let mut start_backlinks: KeyMap<Vec<u32>> = KeyMap::default();
        if let Some(att) = start {
            for (idx, edge) in att.edges.iter().enumerate() {
                let pivot = att
                    .start
                    .anchor(edge.anchor)
                    .expect("attachment anchor validated");
                let base_anchor = bundle
                    .base
                    .config(edge.target as usize)
                    .anchor(edge.anchor)
                    .unwrap();
                let v = TileVertex {
                    id: CfgId::Base(edge.target),
                    translation: pivot.sub(base_anchor),
                };
                start_backlinks
                    .entry(canonical_key(&v))
                    .or_default()
                    .push(idx as u32);
            }
        }
        let dim = bundle.spec.anchor_count() * 2;
        let mut base_embeds = Vec::with_capacity(bundle.n() * dim);
        for c in bundle.base.configs() {
            base_embeds.extend(c.embed());
        }
        let start_embed = start.map(|att| att.start.embed()).unwrap_or_default();
        TilingGraph {
            bundle,
            start,
            start_backlinks,
            base_embeds,
            start_embed,
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The configuration a vertex stands for.
    pub fn realize(&self, v: &TileVertex) -> Configuration {
        match v.id {
            CfgId::Base(i) => translate(self.bundle.base.config(i as usize), v.translation),
            CfgId::Start => self
                .start
                .expect("start vertex used without attachment")
                .start
                .clone(),
        }
    }

    /// Writes the R^{2m} embedding of a vertex into `out` without
    /// materializing the configuration.
    pub fn embed_into(&self, v: &TileVertex, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match v.id {
            CfgId::Base(i) => {
                let row = &self.base_embeds[i as usize * self.dim..(i as usize + 1) * self.dim];
                for k in 0..self.dim / 2 {
                    out[2 * k] = row[2 * k] + v.translation.x;
                    out[2 * k + 1] = row[2 * k + 1] + v.translation.y;
                }
            }
            CfgId::Start => out.copy_from_slice(&self.start_embed),
        }
    }

    /// The start vertex, when an attachment is present.
    pub fn start_vertex(&self) -> Option<TileVertex> {
        self.start.map(|att| TileVertex {
            id: CfgId::Start,
            translation: att.start.head(),
        })
    }

    /// All tiling-roadmap neighbors of v, deduplicated by canonical
    /// key (first generator in (anchor, edge) order wins).
    pub fn neighbors(&self, v: &TileVertex) -> Vec<(TileVertex, TileEdge)> {
        let mut out = Vec::new();
        let mut seen = KeyMap::default();
        self.neighbors_into(v, &mut out, &mut seen);
        out
    }

    /// Allocation-reusing variant of [`TilingGraph::neighbors`] for
    /// the planner's hot loop; `out` and `seen` are cleared first.
    pub fn neighbors_into(
        &self,
        v: &TileVertex,
        out: &mut Vec<(TileVertex, TileEdge)>,
        seen: &mut KeyMap<()>,
    ) {
        out.clear();
        seen.clear();
        match v.id {
            CfgId::Start => {
                let att = self.start.expect("start vertex used without attachment");
                for (idx, edge) in att.edges.iter().enumerate() {
                    let pivot = att.start.anchor(edge.anchor).unwrap();
                    let base_anchor = self
                        .bundle
                        .base
                        .config(edge.target as usize)
                        .anchor(edge.anchor)
                        .unwrap();
                    let nb = TileVertex {
                        id: CfgId::Base(edge.target),
                        translation: pivot.sub(base_anchor),
                    };
                    if seen.insert(canonical_key(&nb), ()).is_none() {
                        out.push((
                            nb,
                            TileEdge {
                                anchor: edge.anchor,
                                kind: EdgeKind::Attachment(idx as u32),
                                translation: pivot,
                                forward: true,
                            },
                        ));
                    }
                }
            }
            CfgId::Base(i) => {
                let base_cfg = self.bundle.base.config(i as usize);
                for rm in &self.bundle.roadmaps {
                    let j = rm.anchor;
                    // Pivot position of this vertex for anchor j.
                    let pivot = base_cfg.anchor(j).unwrap().add(v.translation);
                    for &(nb_id, edge_idx) in &rm.adjacency[i as usize] {
                        let plan = &rm.edges[edge_idx as usize];
                        let nb_anchor =
                            self.bundle.base.config(nb_id as usize).anchor(j).unwrap();
                        let nb = TileVertex {
                            id: CfgId::Base(nb_id),
                            translation: pivot.sub(nb_anchor),
                        };
                        if seen.insert(canonical_key(&nb), ()).is_none() {
                            out.push((
                                nb,
                                TileEdge {
                                    anchor: j,
                                    kind: EdgeKind::Base(edge_idx),
                                    translation: pivot,
                                    forward: plan.a == i,
                                },
                            ));
                        }
                    }
                }
                // Attachment edges leading back to the start.
                if let Some(att) = self.start {
                    if let Some(backs) = self.start_backlinks.get(&canonical_key(v)) {
                        let start_v = self.start_vertex().unwrap();
                        let start_key = canonical_key(&start_v);
                        for &idx in backs {
                            let edge = &att.edges[idx as usize];
                            if seen.insert(start_key, ()).is_none() {
                                out.push((
                                    start_v,
                                    TileEdge {
                                        anchor: edge.anchor,
                                        kind: EdgeKind::Attachment(idx),
                                        translation: att.start.anchor(edge.anchor).unwrap(),
                                        forward: false,
                                    },
                                ));
                            }
                        }
                    }
                }
            }
        }
    }

    /// Swept polygons of the base plan behind an edge, per link, in
    /// the plan's anchored frame (translate by `e.translation` to get
    /// world coordinates).
    pub fn edge_swept(&self, e: &TileEdge) -> &[Vec<Polygon>] {
        match e.kind {
            EdgeKind::Base(idx) => {
                let rm = self
                    .bundle
                    .roadmap_for_anchor(e.anchor)
                    .expect("edge anchor has a roadmap");
                &rm.edges[idx as usize].swept
            }
            EdgeKind::Attachment(idx) => {
                &self.start.expect("attachment edge without start").edges[idx as usize]
                    .path
                    .swept
            }
        }
    }

    /// Obstacle screening for a tiling edge: every translated swept
    /// polygon must avoid every obstacle and stay inside the
    /// workspace. Purely polygon arithmetic; no robot predicates.
    pub fn edge_obstacle_free(&self, e: &TileEdge, scene: &Scene, obstacle_aabbs: &[Aabb]) -> bool {
        robot::counters::bump_sweep();
        let t = e.translation;
        for link_pieces in self.edge_swept(e) {
            for piece in link_pieces {
                let mut bb = piece.aabb();
                bb.min = bb.min.add(t);
                bb.max = bb.max.add(t);
                if !aabb_inside(&bb, &scene.workspace) {
                    return false;
                }
                for (obs, obb) in scene.obstacles.iter().zip(obstacle_aabbs) {
                    if bb.intersects(obb)
                        && crate::geometry2d::poly_poly_intersect_offset(piece, t, obs)
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Dense samples of the motion an edge stands for, oriented from
    /// the traversal source to its target, in world coordinates.
    pub fn edge_samples(&self, e: &TileEdge) -> Vec<Configuration> {
        let mut samples: Vec<Configuration> = match e.kind {
            EdgeKind::Base(idx) => {
                let rm = self
                    .bundle
                    .roadmap_for_anchor(e.anchor)
                    .expect("edge anchor has a roadmap");
                let plan = &rm.edges[idx as usize];
                self.bundle.materialize(rm, plan).samples()
            }
            EdgeKind::Attachment(idx) => self.start.expect("attachment edge without start").edges
                [idx as usize]
                .path
                .samples
                .clone(),
        };
        if !e.forward {
            samples.reverse();
        }
        samples
            .iter()
            .map(|c| translate(c, e.translation))
            .collect()
    }
}

fn aabb_inside(inner: &Aabb, outer: &Aabb) -> bool {
    inner.min.x >= outer.min.x
        && inner.min.y >= outer.min.y
        && inner.max.x <= outer.max.x
        && inner.max.y <= outer.max.y
}
