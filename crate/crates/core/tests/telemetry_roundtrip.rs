use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use terraword_core::runner::{run, Policy, RunOptions, DEFAULT_MAX_TICKS};
use terraword_core::simulation::{GameAssets, GameConfig};
use terraword_core::telemetry::{parse_log, parse_log_text, prompt_length_histogram, ParseMode, PromptLog, PromptLogEntry};
use terraword_core::terraform::{BackendKind, Generators, Prompt, TerraformReceipt};
use terraword_core::tilemap::TileGrid;
use terraword_core::wordbank::WordFrequencyTable;

fn random_receipt(rng: &mut ChaCha8Rng, vocab: &[String]) -> TerraformReceipt {
    let extra = ["\"quoted\"", "back\\slash", "tab-free", "ünïcode", "a\"b\\c"];
    let n = rng.random_range(1..=7);
    let words: Vec<String> = (0..n)
        .map(|_| {
            if rng.random_bool(0.1) {
                extra.choose(rng).unwrap().to_string()
            } else {
                vocab.choose(rng).unwrap().clone()
            }
        })
        .collect();
    TerraformReceipt {
        grid_index: rng.random_range(0..16),
        prompt: Prompt::from_words(&words).unwrap(),
        grid: TileGrid::default(),
        backend: if rng.random_bool(0.5) { BackendKind::Remote } else { BackendKind::LocalRuleBased },
        tick: rng.random_range(0..1_000_000),
        words_spent: words,
    }
}

#[test]
fn random_receipts_survive_the_log() {
    let vocab: Vec<String> = WordFrequencyTable::shipped().entries().iter().map(|(w, _)| w.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let receipts: Vec<_> = (0..1000).map(|_| random_receipt(&mut rng, &vocab)).collect();
    let text: String = receipts.iter().map(|r| PromptLogEntry::from_receipt(r).to_line()).collect();
    let parsed = parse_log_text(&text, ParseMode::Strict).unwrap();
    assert_eq!(parsed.entries.len(), receipts.len());
    for (e, r) in parsed.entries.iter().zip(&receipts) {
        assert_eq!(e.tick, r.tick);
        assert_eq!(e.grid_index, r.grid_index);
        assert_eq!(e.backend, r.backend);
        assert_eq!(e.prompt, r.prompt.rendered());
        assert_eq!(e.word_count, r.prompt.len());
    }
    let h = prompt_length_histogram(&parsed.entries).unwrap();
    assert_eq!(h.total(), 1000);
    for (bucket, &count) in h.counts.iter().enumerate() {
        let expected = parsed.entries.iter().filter(|e| e.word_count.clamp(1, 5) - 1 == bucket).count();
        assert_eq!(count as usize, expected);
    }
    assert!((h.percentages.iter().sum::<f64>() - 100.0).abs() < 0.05);
}

#[test]
fn lenient_parsing_skips_bad_lines() {
    let good = PromptLogEntry::new(3, 4, BackendKind::Remote, "a lake").to_line();
    let text = format!("{good}garbage\n12\t99\tremote\t\"x\"\n{good}");
    assert!(parse_log_text(&text, ParseMode::Strict).is_err());
    let parsed = parse_log_text(&text, ParseMode::Lenient).unwrap();
    assert_eq!(parsed.entries.len(), 2);
    assert_eq!(parsed.skipped.iter().map(|s| s.0).collect::<Vec<_>>(), vec![2, 3]);
}

#[test]
fn headless_run_logs_every_receipt_once() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("prompts.log");
    let mut log = PromptLog::open(&path).unwrap();
    let report = run(
        GameConfig::default(),
        7,
        Policy::baseline(),
        &Generators::default(),
        &GameAssets::default(),
        RunOptions { max_ticks: DEFAULT_MAX_TICKS, prompt_log: Some(&mut log) },
    )
    .unwrap();
    drop(log);
    let entries = parse_log(&path, ParseMode::Strict).unwrap().entries;
    assert!(!report.receipts.is_empty());
    let expected: Vec<_> = report.receipts.iter().map(PromptLogEntry::from_receipt).collect();
    assert_eq!(entries, expected);
}
