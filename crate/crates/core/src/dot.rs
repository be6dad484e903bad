//! Graphviz DOT export of bubbles, gluings, Feynman graphs, plane trees and
//! decorated maps. Edges carry their color (or color set) as a label.

use std::fmt::Write;

use crate::bubble::{Bubble, Side};
use crate::color::ColorSet;
use crate::feynman::FeynmanGraph;
use crate::gluing::GluingGraph;
use crate::ifield::DecoratedMap;
use crate::plane_tree::PlaneTree;

fn set_label(c: ColorSet) -> String {
    let v: Vec<String> = c.iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", v.join(","))
}

fn node_style(side: Side) -> &'static str {
    match side {
        Side::White => "shape=circle,style=solid",
        Side::Black => "shape=circle,style=filled,fillcolor=black,fontcolor=white",
    }
}

pub fn bubble_dot(b: &Bubble) -> String {
    let mut s = String::from("graph bubble {\n");
    for v in b.vertices() {
        let side = b.side(v).expect("own vertex");
        let _ = writeln!(s, "  v{} [label=\"{}\",{}];", v.0, v.0, node_style(side));
    }
    for w in b.whites() {
        for c in 1..=b.d() {
            let _ = writeln!(s, "  v{} -- v{} [label=\"{c}\"];", w.0, b.neighbor(w, c).0);
        }
    }
    s.push_str("}\n");
    s
}

/// Quartics as clusters; dashed lines drawn dashed.
pub fn gluing_dot(g: &GluingGraph) -> String {
    let mut s = String::from("graph gluing {\n");
    for (j, q) in g.quartics().iter().enumerate() {
        let _ = writeln!(s, "  subgraph cluster_q{j} {{\n    label=\"{}\";", set_label(q.colors));
        for (k, v) in q.vertices.iter().enumerate() {
            let side = if k % 2 == 0 { Side::White } else { Side::Black };
            let _ = writeln!(s, "    v{} [label=\"{}\",{}];", v.0, v.0, node_style(side));
        }
        let [a, abar, b, bbar] = q.vertices;
        let (c, hat) = (set_label(q.colors), set_label(q.colors.complement(g.d())));
        let _ = writeln!(s, "    v{} -- v{} [label=\"{hat}\"];", a.0, abar.0);
        let _ = writeln!(s, "    v{} -- v{} [label=\"{hat}\"];", b.0, bbar.0);
        let _ = writeln!(s, "    v{} -- v{} [label=\"{c}\"];", a.0, bbar.0);
        let _ = writeln!(s, "    v{} -- v{} [label=\"{c}\"];", b.0, abar.0);
        s.push_str("  }\n");
    }
    for &(w, b) in g.dashed() {
        let _ = writeln!(s, "  v{} -- v{} [style=dashed,label=\"0\"];", w.0, b.0);
    }
    s.push_str("}\n");
    s
}

/// Bubble copies as clusters, the Wick matching as dashed color-0 edges.
pub fn feynman_dot(g: &FeynmanGraph) -> String {
    let ens = g.ensemble();
    let mut s = String::from("graph feynman {\n");
    for (i, copy) in ens.copies().iter().enumerate() {
        let b = &copy.bubble;
        let _ = writeln!(s, "  subgraph cluster_{i} {{\n    label=\"copy {i} (interaction {})\";", copy.interaction);
        for v in b.vertices() {
            let side = b.side(v).expect("own vertex");
            let _ = writeln!(s, "    c{i}_{} [label=\"{}\",{}];", v.0, v.0, node_style(side));
        }
        for w in b.whites() {
            for c in 1..=b.d() {
                let _ = writeln!(s, "    c{i}_{} -- c{i}_{} [label=\"{c}\"];", w.0, b.neighbor(w, c).0);
            }
        }
        s.push_str("  }\n");
    }
    for ((wi, w), (bi, b)) in g.pairs() {
        let _ = writeln!(s, "  c{wi}_{} -- c{bi}_{} [style=dashed,label=\"0\"];", w.0, b.0);
    }
    s.push_str("}\n");
    s
}

/// Vertices list their ccw rotation and marked corner; edges their color set.
pub fn tree_dot(t: &PlaneTree) -> String {
    let mut s = String::from("graph plane_tree {\n");
    for (i, v) in t.vertices().iter().enumerate() {
        let rot: Vec<String> = v.halfedges.iter().map(|h| h.0.to_string()).collect();
        let _ = writeln!(s, "  t{i} [label=\"{i}: ({}) mark {}\"];", rot.join(" "), v.marked_corner);
    }
    for e in t.edges() {
        let _ = writeln!(
            s,
            "  t{} -- t{} [label=\"{}\",taillabel=\"{}\",headlabel=\"{}\"];",
            t.vertex_of(e.h1),
            t.vertex_of(e.h2),
            set_label(e.colors),
            e.h1.0,
            e.h2.0
        );
    }
    s.push_str("}\n");
    s
}

pub fn map_dot(m: &DecoratedMap) -> String {
    let mut s = String::from("graph map {\n");
    for (i, rot) in m.rotations().iter().enumerate() {
        let r: Vec<String> = rot.iter().map(|h| h.to_string()).collect();
        let _ = writeln!(s, "  m{i} [label=\"{i}: ({})\"];", r.join(" "));
    }
    for (e, &c) in m.colors().iter().enumerate() {
        let (a, b) = m.endpoints(e);
        let _ = writeln!(s, "  m{a} -- m{b} [label=\"{}\"];", set_label(c));
    }
    s.push_str("}\n");
    s
}
