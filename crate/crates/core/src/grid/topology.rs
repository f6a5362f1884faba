//! Hop-distance queries over the branch graph.

use std::collections::VecDeque;

/// BFS hop distances from `source`; `None` for unreachable vertices.
pub fn hop_distances(adjacency: &[Vec<usize>], source: usize) -> Vec<Option<usize>> {
    let mut dist = vec![None; adjacency.len()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap();
        for &v in &adjacency[u] {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Internal indices of all buses within `radius` hops of `center`,
/// including `center` itself, in ascending index order.
pub fn k_hop_neighborhood(adjacency: &[Vec<usize>], center: usize, radius: usize) -> Vec<usize> {
    hop_distances(adjacency, center)
        .iter()
        .enumerate()
        .filter(|(_, d)| matches!(d, Some(d) if *d <= radius))
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::case::resolve_case;

    /// Exhaustive oracle: grow the ball one edge relaxation at a time.
    fn brute_force_ball(adjacency: &[Vec<usize>], center: usize, radius: usize) -> Vec<usize> {
        let mut ball = vec![false; adjacency.len()];
        ball[center] = true;
        for _ in 0..radius {
            let snapshot = ball.clone();
            for (u, inside) in snapshot.iter().enumerate() {
                if *inside {
                    for &v in &adjacency[u] {
                        ball[v] = true;
                    }
                }
            }
        }
        ball.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }

    #[test]
    fn radius_zero_is_the_center() {
        let case = resolve_case("ieee14").unwrap();
        let adj = case.adjacency();
        let center = case.index_of(5).unwrap();
        assert_eq!(k_hop_neighborhood(&adj, center, 0), vec![center]);
    }

    #[test]
    fn matches_brute_force_on_all_cases() {
        for name in ["ieee14", "ieee118", "ieee300"] {
            let case = resolve_case(name).unwrap();
            let adj = case.adjacency();
            for center in (0..case.n()).step_by(7) {
                for radius in 0..4 {
                    assert_eq!(
                        k_hop_neighborhood(&adj, center, radius),
                        brute_force_ball(&adj, center, radius),
                        "{name} center {center} radius {radius}"
                    );
                }
            }
        }
    }

    #[test]
    fn ieee14_two_hops_from_bus_10() {
        // Bus 10 has 1-hop neighbors 9 and 11; buses 4, 7, 14 join at two
        // hops via 9 and bus 6 joins via 11.
        let case = resolve_case("ieee14").unwrap();
        let adj = case.adjacency();
        let center = case.index_of(10).unwrap();
        let mut ids: Vec<i64> =
            k_hop_neighborhood(&adj, center, 2).iter().map(|&i| case.bus_id(i)).collect();
        ids.sort_unstable();
        assert_eq!(ids, vec![4, 6, 7, 9, 10, 11, 14]);
    }

    #[test]
    fn radius_covers_whole_graph_eventually() {
        let case = resolve_case("ieee14").unwrap();
        let adj = case.adjacency();
        let center = case.index_of(1).unwrap();
        assert_eq!(k_hop_neighborhood(&adj, center, 13).len(), 14);
    }
}
