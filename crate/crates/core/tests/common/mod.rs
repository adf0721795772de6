#![allow(dead_code)]

use nodecap::energy::{energy_of, EevrpInstance};
use nodecap::graph::UndirectedMultigraph;

pub fn simple_paths(g: &UndirectedMultigraph, s: usize, t: usize) -> Vec<Vec<usize>> {
    fn go(g: &UndirectedMultigraph, t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == t {
            out.push(path.clone());
            return;
        }
        let mut next = g.neighbors(u).to_vec();
        next.sort_unstable();
        next.dedup();
        for v in next {
            if !path.contains(&v) {
                path.push(v);
                go(g, t, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(g, t, &mut vec![s], &mut out);
    out
}

/// Minimum energy over every choice of one simple path per pair.
pub fn min_energy(e: &EevrpInstance) -> f64 {
    let n = e.graph.node_count();
    let options: Vec<_> = e.pairs.iter().map(|&(s, t)| simple_paths(&e.graph, s, t)).collect();
    let mut best = f64::INFINITY;
    let mut pick = vec![0usize; options.len()];
    loop {
        let paths: Vec<Vec<usize>> = pick.iter().zip(&options).map(|(&i, o)| o[i].clone()).collect();
        best = best.min(energy_of(&paths, n, e.sigma, e.alpha));
        let mut j = 0;
        while j < pick.len() {
            pick[j] += 1;
            if pick[j] < options[j].len() {
                break;
            }
            pick[j] = 0;
            j += 1;
        }
        if j == pick.len() {
            return best;
        }
    }
}
