use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use terraword_core::postprocess::{rock_heights, water_components, water_masks, MASK_E, MASK_N, MASK_S, MASK_W};
use terraword_core::tilemap::{Cell, TileGrid, TileId, TileSet, World, GRID_COUNT, SUBGRID_SIZE, WORLD_SIZE};

const ROCK: u8 = 5;
const WATER: u8 = 9;

fn random_world(rng: &mut ChaCha8Rng) -> World {
    let mut w = World::new(TileId::GRASS);
    for g in 0..GRID_COUNT {
        let mut grid = TileGrid::filled(TileId::GRASS);
        for y in 0..SUBGRID_SIZE {
            for x in 0..SUBGRID_SIZE {
                let v = match rng.random_range(0..10) {
                    0..=2 => ROCK,
                    3..=5 => WATER,
                    _ => rng.random_range(0..16u8),
                };
                grid.set(x, y, TileId::new(v).unwrap());
            }
        }
        w.place_subgrid(g, grid).unwrap();
    }
    w
}

fn is(w: &World, x: isize, y: isize, v: u8) -> bool {
    (0..WORLD_SIZE as isize).contains(&x)
        && (0..WORLD_SIZE as isize).contains(&y)
        && w.tile(Cell::new(x as usize, y as usize)).value() == v
}

#[test]
fn rock_heights_match_brute_force() {
    let tiles = TileSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let w = random_world(&mut rng);
        let h = rock_heights(&w, &tiles);
        for y in 0..WORLD_SIZE as isize {
            for x in 0..WORLD_SIZE as isize {
                let mut expected = 0;
                if is(&w, x, y, ROCK) {
                    for dy in -1..=1 {
                        for dx in -1..=1 {
                            if (dx, dy) != (0, 0) && is(&w, x + dx, y + dy, ROCK) {
                                expected += 1;
                            }
                        }
                    }
                }
                assert_eq!(h.get(Cell::new(x as usize, y as usize)), expected);
            }
        }
    }
}

#[test]
fn water_masks_are_symmetric_and_match_components() {
    let tiles = TileSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut crossings = 0;
    for _ in 0..100 {
        let w = random_world(&mut rng);
        let m = water_masks(&w, &tiles);
        for c in World::cells() {
            let mask = m.get(c);
            if w.tile(c).value() != WATER {
                assert_eq!(mask, 0);
                continue;
            }
            if c.x + 1 < WORLD_SIZE {
                let e = Cell::new(c.x + 1, c.y);
                assert_eq!(mask & MASK_E != 0, m.get(e) & MASK_W != 0);
                assert_eq!(mask & MASK_E != 0, w.tile(e).value() == WATER);
                if mask & MASK_E != 0 && c.grid_index() != e.grid_index() {
                    crossings += 1;
                }
            }
            if c.y + 1 < WORLD_SIZE {
                let s = Cell::new(c.x, c.y + 1);
                assert_eq!(mask & MASK_S != 0, m.get(s) & MASK_N != 0);
                assert_eq!(mask & MASK_S != 0, w.tile(s).value() == WATER);
            }
        }
        // Union-find over mask edges must reproduce the flood-fill components.
        let idx = |c: Cell| c.y * WORLD_SIZE + c.x;
        let mut parent: Vec<usize> = (0..WORLD_SIZE * WORLD_SIZE).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            let mut r = i;
            while p[r] != r {
                r = p[r];
            }
            p[i] = r;
            r
        }
        for c in World::cells() {
            let mask = m.get(c);
            if mask & MASK_E != 0 {
                let (a, b) = (find(&mut parent, idx(c)), find(&mut parent, idx(Cell::new(c.x + 1, c.y))));
                parent[a] = b;
            }
            if mask & MASK_S != 0 {
                let (a, b) = (find(&mut parent, idx(c)), find(&mut parent, idx(Cell::new(c.x, c.y + 1))));
                parent[a] = b;
            }
        }
        let comps = water_components(&w, &tiles);
        let mut label_of: HashMap<usize, usize> = HashMap::new();
        for (k, comp) in comps.iter().enumerate() {
            for &c in comp {
                let root = find(&mut parent, idx(c));
                assert_eq!(*label_of.entry(root).or_insert(k), k, "component split or merged");
            }
        }
        assert_eq!(label_of.len(), comps.len());
    }
    assert!(crossings > 0);
}
