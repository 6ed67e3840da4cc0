use super::AtomicMeasure;
use crate::error::Result;
use crate::scalar::{lit, Scalar};

/// Exact Wasserstein-1 distance with Euclidean ground cost, by successive
/// shortest augmenting paths with node potentials on the complete
/// bipartite graph between the atoms.
pub fn wasserstein1<S: Scalar>(a: &AtomicMeasure<S>, b: &AtomicMeasure<S>) -> Result<S> {
    a.check()?;
    b.check()?;
    let (n, m) = (a.len(), b.len());
    let cost: Vec<S> = a
        .atoms
        .iter()
        .flat_map(|(p, _)| b.atoms.iter().map(move |(q, _)| p.dist(*q)))
        .collect();
    let mut supply: Vec<S> = a.atoms.iter().map(|x| x.1).collect();
    let mut demand: Vec<S> = b.atoms.iter().map(|x| x.1).collect();
    let mut flow = vec![S::zero(); n * m];
    // nodes 0..n are sources, n..n+m sinks
    let mut pot = vec![S::zero(); n + m];
    let eps = lit::<S>(1e-15);
    let inf = S::infinity();
    let mut dist = vec![inf; n + m];
    let mut parent = vec![usize::MAX; n + m];
    let mut done = vec![false; n + m];

    while supply.iter().any(|&s| s > eps) {
        dist.iter_mut().for_each(|d| *d = inf);
        parent.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for i in 0..n {
            if supply[i] > eps {
                dist[i] = S::zero();
            }
        }
        let mut target = None;
        loop {
            let mut u = usize::MAX;
            let mut best = inf;
            for v in 0..n + m {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u >= n && demand[u - n] > eps {
                target = Some(u);
                break;
            }
            if u < n {
                for j in 0..m {
                    let v = n + j;
                    if done[v] {
                        continue;
                    }
                    let rc = (cost[u * m + j] + pot[u] - pot[v]).max(S::zero());
                    if dist[u] + rc < dist[v] {
                        dist[v] = dist[u] + rc;
                        parent[v] = u;
                    }
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if done[i] || flow[i * m + j] <= S::zero() {
                        continue;
                    }
                    let rc = (-cost[i * m + j] + pot[u] - pot[i]).max(S::zero());
                    if dist[u] + rc < dist[i] {
                        dist[i] = dist[u] + rc;
                        parent[i] = u;
                    }
                }
            }
        }
        let Some(t) = target else { break };
        let dt = dist[t];
        for v in 0..n + m {
            if dist[v] < dt {
                pot[v] = pot[v] + dist[v];
            } else {
                pot[v] = pot[v] + dt;
            }
        }
        // bottleneck along the path back to a source with supply
        let mut amount = demand[t - n];
        let mut v = t;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u >= n {
                amount = amount.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        amount = amount.min(supply[v]);
        let s = v;
        let mut v = t;
        while parent[v] != usize::MAX {
            let u = parent[v];
            if u < n {
                flow[u * m + (v - n)] = flow[u * m + (v - n)] + amount;
            } else {
                let k = v * m + (u - n);
                flow[k] = flow[k] - amount;
                if flow[k] < eps {
                    flow[k] = S::zero();
                }
            }
            v = u;
        }
        supply[s] = supply[s] - amount;
        demand[t - n] = demand[t - n] - amount;
    }
    Ok(flow.iter().zip(&cost).map(|(&f, &c)| f * c).sum())
}
