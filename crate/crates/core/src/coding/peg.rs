//! Progressive edge-growth construction of regular LDPC codes.
//!
//! Each variable node acquires its edges one by one; every new edge goes to
//! the check node farthest from the variable in the current graph (treating
//! unreachable checks as infinitely far), with ties broken first by lowest
//! degree and then by a seeded draw. Deterministic for a fixed seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Grows a variable-regular code with `n` variables of degree `col_degree`
/// and `m` checks; returns check-to-variable adjacency. Check degrees are
/// concentrated around `n*col_degree/m` by the lowest-degree tie-break but
/// not forced exactly regular, keeping the girth large.
pub fn peg_generate(n: usize, m: usize, col_degree: usize, seed: u64) -> Vec<Vec<u32>> {
    assert!(n * col_degree % m == 0, "degrees do not divide evenly");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut var_checks: Vec<Vec<u32>> = vec![Vec::with_capacity(col_degree); n];
    let mut check_vars: Vec<Vec<u32>> = vec![Vec::new(); m];
    let mut check_deg = vec![0u32; m];

    // Scratch for the alternating BFS.
    let mut check_dist = vec![u32::MAX; m];
    let mut var_seen = vec![false; n];

    for v in 0..n {
        for edge in 0..col_degree {
            let eligible = |c: usize, var_checks: &[Vec<u32>], _check_deg: &[u32]| {
                !var_checks[v].contains(&(c as u32))
            };
            let candidates: Vec<usize> = if edge == 0 {
                // First edge: all open checks are equally far.
                (0..m)
                    .filter(|&c| eligible(c, &var_checks, &check_deg))
                    .collect()
            } else {
                // BFS from v through the bipartite graph; unreachable
                // checks rank as infinitely far.
                check_dist.fill(u32::MAX);
                var_seen.fill(false);
                var_seen[v] = true;
                let mut frontier: Vec<u32> = var_checks[v].clone();
                let mut depth = 0u32;
                for &c in &frontier {
                    check_dist[c as usize] = depth;
                }
                let mut reached = frontier.len();
                while !frontier.is_empty() && reached < m {
                    depth += 1;
                    let mut next = Vec::new();
                    for &c in &frontier {
                        for &v2 in &check_vars[c as usize] {
                            if var_seen[v2 as usize] {
                                continue;
                            }
                            var_seen[v2 as usize] = true;
                            for &c2 in &var_checks[v2 as usize] {
                                if check_dist[c2 as usize] == u32::MAX {
                                    check_dist[c2 as usize] = depth;
                                    next.push(c2);
                                    reached += 1;
                                }
                            }
                        }
                    }
                    frontier = next;
                }
                let max_dist = (0..m)
                    .filter(|&c| eligible(c, &var_checks, &check_deg))
                    .map(|c| check_dist[c])
                    .max()
                    .expect("some open check remains");
                (0..m)
                    .filter(|&c| {
                        check_dist[c] == max_dist && eligible(c, &var_checks, &check_deg)
                    })
                    .collect()
            };

            let min_deg = candidates.iter().map(|&c| check_deg[c]).min().unwrap();
            let best: Vec<usize> = candidates
                .into_iter()
                .filter(|&c| check_deg[c] == min_deg)
                .collect();
            let pick = best[rng.random_range(0..best.len())];
            var_checks[v].push(pick as u32);
            check_vars[pick].push(v as u32);
            check_deg[pick] += 1;
        }
    }
    check_vars
}
