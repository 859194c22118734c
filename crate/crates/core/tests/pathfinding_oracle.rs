use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use terraword_core::simulation::find_path;
use terraword_core::simulation::pathfinding::{step_cost, COST_UNIT};
use terraword_core::tilemap::{Cell, TileGrid, TileId, TileSet, World, SUBGRID_SIZE};

/// Dijkstra without a heap over the 10×10 corner, using the tileset's speeds
/// directly.
fn ucs_cost(tiles: &TileSet, grid: &TileGrid, from: (usize, usize), to: (usize, usize)) -> Option<u64> {
    let n = SUBGRID_SIZE;
    let cost_of = |x: usize, y: usize| {
        let d = tiles.get(grid.get(x, y));
        d.walkable.then(|| (COST_UNIT as f64 / d.speed_multiplier).round() as u64)
    };
    let mut dist = vec![u64::MAX; n * n];
    let mut done = vec![false; n * n];
    dist[from.1 * n + from.0] = 0;
    loop {
        let mut best = None;
        for i in 0..n * n {
            if !done[i] && dist[i] != u64::MAX && best.is_none_or(|b: usize| dist[i] < dist[b]) {
                best = Some(i);
            }
        }
        let Some(i) = best else { return None };
        if i == to.1 * n + to.0 {
            return Some(dist[i]);
        }
        done[i] = true;
        let (x, y) = (i % n, i / n);
        let mut next = Vec::new();
        if x > 0 { next.push((x - 1, y)); }
        if x + 1 < n { next.push((x + 1, y)); }
        if y > 0 { next.push((x, y - 1)); }
        if y + 1 < n { next.push((x, y + 1)); }
        for (nx, ny) in next {
            if let Some(c) = cost_of(nx, ny) {
                let j = ny * n + nx;
                dist[j] = dist[j].min(dist[i] + c);
            }
        }
    }
}

#[test]
fn astar_matches_uniform_cost_search_on_random_worlds() {
    let tiles = TileSet::default();
    let rock = TileId::new(5).unwrap();
    let palette: Vec<TileId> = [0u8, 0, 0, 4, 5, 9, 9, 8, 3, 6].iter().map(|&v| TileId::new(v).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut found = 0;
    for _ in 0..100 {
        let mut grid = TileGrid::filled(TileId::GRASS);
        for y in 0..SUBGRID_SIZE {
            for x in 0..SUBGRID_SIZE {
                grid.set(x, y, palette[rng.random_range(0..palette.len())]);
            }
        }
        // Wall the 10×10 corner off from the rest of the world.
        let mut world = World::new(rock);
        world.place_subgrid(0, grid).unwrap();
        for _ in 0..5 {
            let from = (rng.random_range(0..SUBGRID_SIZE), rng.random_range(0..SUBGRID_SIZE));
            let to = (rng.random_range(0..SUBGRID_SIZE), rng.random_range(0..SUBGRID_SIZE));
            let path = find_path(&world, &tiles, Cell::new(from.0, from.1), Cell::new(to.0, to.1));
            let oracle = if from == to { Some(0) } else { ucs_cost(&tiles, &grid, from, to) };
            assert_eq!(path.as_ref().map(|p| p.cost), oracle);
            if let Some(p) = path {
                found += 1;
                assert_eq!(p.cells[0], Cell::new(from.0, from.1));
                assert_eq!(p.goal(), Cell::new(to.0, to.1));
                let mut sum = 0;
                for w in p.cells.windows(2) {
                    assert_eq!(w[0].manhattan(w[1]), 1);
                    sum += step_cost(&world, &tiles, w[1]).expect("path crosses a blocked cell");
                }
                assert_eq!(sum, p.cost);
            }
        }
    }
    assert!(found > 100);
}
