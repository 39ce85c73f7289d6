//! Plain RRT over the 2D workspace with a clearance margin, followed by
//! greedy shortcutting.

use rand::Rng;

use crate::rng::StreamRng;
use crate::world::{Segment, Vec2, WorldMap};

pub struct RrtConfig {
    pub step: f64,
    pub goal_bias: f64,
    pub max_iterations: usize,
}

impl Default for RrtConfig {
    fn default() -> Self {
        Self {
            step: 1.0,
            goal_bias: 0.1,
            max_iterations: 6000,
        }
    }
}

struct Node {
    p: Vec2,
    parent: usize,
}

/// Waypoints from `start` to `goal` whose connecting segments keep `margin`
/// from every wall, or `None` if the search gives up.
pub fn rrt_path(
    map: &WorldMap,
    start: Vec2,
    goal: Vec2,
    margin: f64,
    cfg: &RrtConfig,
    rng: &mut StreamRng,
) -> Option<Vec<Vec2>> {
    let clear = |a: Vec2, b: Vec2| map.segment_clear(&Segment::new(a, b), margin);
    if clear(start, goal) {
        return Some(vec![start, goal]);
    }
    let b = map.bounds;
    let mut nodes = vec![Node { p: start, parent: 0 }];
    for _ in 0..cfg.max_iterations {
        let sample = if rng.gen::<f64>() < cfg.goal_bias {
            goal
        } else {
            Vec2::new(rng.gen_range(b.xmin..b.xmax), rng.gen_range(b.ymin..b.ymax))
        };
        let (near_i, near) = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (i, n.p))
            .min_by(|a, b| a.1.dist(sample).total_cmp(&b.1.dist(sample)))
            .unwrap();
        let d = near.dist(sample);
        if d < 1e-9 {
            continue;
        }
        let new = if d > cfg.step { near + (sample - near) * (cfg.step / d) } else { sample };
        if !clear(near, new) {
            continue;
        }
        nodes.push(Node { p: new, parent: near_i });
        if clear(new, goal) {
            let mut path = vec![goal];
            let mut i = nodes.len() - 1;
            loop {
                path.push(nodes[i].p);
                if i == 0 {
                    break;
                }
                i = nodes[i].parent;
            }
            path.reverse();
            return Some(shortcut(map, &path, margin));
        }
    }
    None
}

/// Greedy shortcutting: from each kept waypoint jump to the farthest later
/// waypoint with a clear connection.
pub fn shortcut(map: &WorldMap, path: &[Vec2], margin: f64) -> Vec<Vec2> {
    if path.len() <= 2 {
        return path.to_vec();
    }
    let mut out = vec![path[0]];
    let mut i = 0;
    while i < path.len() - 1 {
        let mut j = path.len() - 1;
        while j > i + 1 && !map.segment_clear(&Segment::new(path[i], path[j]), margin) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::world::gen::{generate, MapStyle, TextureProfile};

    #[test]
    fn finds_clear_route_around_corner() {
        for seed in 0..5 {
            let g = generate(seed, MapStyle::Corner, &TextureProfile::default());
            let mut rng = stream(seed, &["rrt".into()]);
            let path = rrt_path(&g.map, g.map.start.position(), g.map.goal, 0.8, &RrtConfig::default(), &mut rng)
                .expect("route");
            assert_eq!(path[0], g.map.start.position());
            assert_eq!(*path.last().unwrap(), g.map.goal);
            for w in path.windows(2) {
                assert!(g.map.segment_clear(&Segment::new(w[0], w[1]), 0.8));
            }
        }
    }
}
