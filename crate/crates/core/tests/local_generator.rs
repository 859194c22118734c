use terraword_core::terraform::{generate_local, AffinityTable, Generator, LocalGenerator, Prompt};
use terraword_core::tilemap::{TileGrid, TileId, TileSet, SUBGRID_SIZE};

const WATER: u8 = 9;

fn largest_component(grid: &TileGrid, tile: TileId) -> usize {
    let mut seen = [[false; SUBGRID_SIZE]; SUBGRID_SIZE];
    let mut best = 0;
    for y in 0..SUBGRID_SIZE {
        for x in 0..SUBGRID_SIZE {
            if seen[y][x] || grid.get(x, y) != tile {
                continue;
            }
            let mut stack = vec![(x, y)];
            seen[y][x] = true;
            let mut size = 0;
            while let Some((cx, cy)) = stack.pop() {
                size += 1;
                let mut next = Vec::new();
                if cx > 0 { next.push((cx - 1, cy)); }
                if cx + 1 < SUBGRID_SIZE { next.push((cx + 1, cy)); }
                if cy > 0 { next.push((cx, cy - 1)); }
                if cy + 1 < SUBGRID_SIZE { next.push((cx, cy + 1)); }
                for (nx, ny) in next {
                    if !seen[ny][nx] && grid.get(nx, ny) == tile {
                        seen[ny][nx] = true;
                        stack.push((nx, ny));
                    }
                }
            }
            best = best.max(size);
        }
    }
    best
}

#[test]
fn forest_is_a_concentrated_tree_area_for_every_seed() {
    let tiles = TileSet::default();
    let g = LocalGenerator::default();
    let prompt = Prompt::parse("forest").unwrap();
    let tree_ids: Vec<TileId> = TileId::all().filter(|&t| tiles.get(t).choppable).collect();
    for seed in 0..100 {
        let grid = g.generate(&prompt, seed).unwrap();
        let trees: usize = tree_ids.iter().map(|&t| grid.count(t)).sum();
        let component = tree_ids.iter().map(|&t| largest_component(&grid, t)).max().unwrap();
        assert!(trees >= 30, "seed {seed}: {trees} trees");
        assert!(component >= 8, "seed {seed}: component {component}");
    }
}

#[test]
fn generation_is_a_pure_function() {
    let g = LocalGenerator::default();
    for text in ["forest", "a river in a forest", "village near the sea", "qqq"] {
        let p = Prompt::parse(text).unwrap();
        for seed in 0..50 {
            assert_eq!(g.generate(&p, seed).unwrap(), g.generate(&p, seed).unwrap());
        }
    }
}

#[test]
fn appending_water_words_never_lowers_expected_water() {
    let table = AffinityTable::shipped();
    let water = TileId::new(WATER).unwrap();
    let water_words: Vec<&str> = table.iter().filter(|(_, a)| a.dominant() == water).map(|(w, _)| w).collect();
    assert!(!water_words.is_empty());
    let mut prompts: Vec<Vec<&str>> = table.iter().map(|(w, _)| vec![w]).collect();
    prompts.extend([vec!["a", "forest"], vec!["village", "trees"], vec!["rocks", "sand", "path"], vec![]]);
    let mean_water = |words: &[&str]| {
        (0..100u64).map(|s| generate_local(words, s, &table).count(water)).sum::<usize>() as f64 / 100.0
    };
    for base in &prompts {
        let before = mean_water(base);
        for w in &water_words {
            let mut extended = base.clone();
            extended.push(w);
            let after = mean_water(&extended);
            assert!(after >= before, "{base:?} + {w}: {before} -> {after}");
        }
    }
}
