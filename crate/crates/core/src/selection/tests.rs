use super::*;
use crate::ir::fixtures::*;
use crate::ir::Program;
use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest};
use super::Strategy;

fn parsed(id: &str, lang: Lang, src: &str, label: usize) -> ParsedProgram {
    ParsedProgram::new(Program { id: id.into(), lang, content: src.into(), label, io_pairs: vec![] }).unwrap()
}

fn space_cfg(include_originals: bool) -> SpaceConfig {
    SpaceConfig { seed: 9, epoch: 0, include_originals, text: TextOpConfig::default() }
}

fn cfg(strategy: Strategy, k: usize) -> SelectionConfig {
    SelectionConfig { strategy, k, seed: 1, include_originals: true }
}

#[test]
fn operator_catalog_has_23_entries() {
    let all = Operator::all();
    assert_eq!(all.len(), 23);
    for op in all.iter().chain([&Operator::Original]) {
        assert_eq!(op.slug().parse::<Operator>().unwrap(), *op);
        let json = serde_json::to_string(op).unwrap();
        assert_eq!(serde_json::from_str::<Operator>(&json).unwrap(), *op);
    }
}

#[test]
fn max_loss_example() {
    let losses = [Some(0.1), Some(0.9), Some(0.5)];
    assert_eq!(select_indices(&losses, &cfg(Strategy::MaxLoss, 2)).unwrap(), vec![1, 2]);
    assert_eq!(select_indices(&losses, &cfg(Strategy::MinLoss, 2)).unwrap(), vec![0, 2]);
}

#[test]
fn ties_break_by_index() {
    let losses = [Some(0.3); 5];
    for s in [Strategy::MaxLoss, Strategy::MinLoss] {
        assert_eq!(select_indices(&losses, &cfg(s, 2)).unwrap(), vec![0, 1]);
    }
}

#[test]
fn unscored_and_zero_k() {
    let losses = [Some(0.3), None];
    assert_eq!(select_indices(&losses, &cfg(Strategy::MaxLoss, 1)), Err(SelectionError::UnscoredCandidate("#1".into())));
    assert_eq!(select_indices(&losses, &cfg(Strategy::Random, 2)).unwrap().len(), 2);
    assert_eq!(select_indices(&losses, &cfg(Strategy::Random, 0)), Err(SelectionError::ZeroK));
}

#[test]
fn no_integer_program_gives_one_skip() {
    let p = parsed("p", Lang::PyLite, "def f(s):\n    t = s\n    return t\n", 0);
    let space = build_search_space(&[p], &[Operator::Refactor(RefactorKind::PlusZero)], &space_cfg(false));
    assert!(space.candidates.is_empty());
    assert_eq!(space.skips.len(), 1);
}

fn sample_programs() -> Vec<ParsedProgram> {
    vec![
        parsed("even", Lang::JavaLite, EVEN_JAVA, 0),
        parsed("fact-j", Lang::JavaLite, FACTORIAL_JAVA, 1),
        parsed("fact-p", Lang::PyLite, FACTORIAL_PY, 1),
    ]
}

#[test]
fn search_space_shape_and_determinism() {
    let programs = sample_programs();
    let ops = Operator::all();
    let a = build_search_space(&programs, &ops, &space_cfg(true));
    let b = build_search_space(&programs, &ops, &space_cfg(true));
    assert_eq!(a, b);
    assert_eq!(a.candidates.len() + a.skips.len(), 23 * 3 + 3);
    let originals: Vec<_> = a.candidates.iter().filter(|c| c.operator == Operator::Original).collect();
    assert_eq!(originals.len(), 3);
    assert!(a.candidates[a.candidates.len() - 3..].iter().all(|c| c.operator == Operator::Original));
    for c in &a.candidates {
        let origin = programs.iter().find(|p| p.program.id == c.origin_id).unwrap();
        assert_eq!(c.label, origin.program.label);
        if c.operator == Operator::Original {
            assert_eq!(c.content, origin.program.content);
        } else {
            assert_ne!(c.content, origin.program.content);
        }
    }
    let ids: std::collections::BTreeSet<_> = a.candidates.iter().map(|c| &c.id).collect();
    assert_eq!(ids.len(), a.candidates.len());
    // Another epoch draws fresh sites.
    let later = build_search_space(&programs, &ops, &SpaceConfig { epoch: 1, ..space_cfg(true) });
    assert_ne!(later.candidates, a.candidates);
}

#[test]
fn provenance_marks_selected_rows() {
    let programs = sample_programs();
    let mut space = build_search_space(&programs, &Operator::all(), &space_cfg(false));
    for (i, c) in space.candidates.iter_mut().enumerate() {
        c.loss = Some(i as f64);
    }
    let picked = select_indices(&space.candidates.iter().map(|c| c.loss).collect::<Vec<_>>(), &cfg(Strategy::MaxLoss, 3)).unwrap();
    let rows = provenance(4, &space.candidates, &picked);
    assert_eq!(rows.iter().filter(|r| r.selected).count(), 3);
    assert!(rows[rows.len() - 1].selected);
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &rows).unwrap();
    let first: serde_json::Value = serde_json::from_str(std::str::from_utf8(&buf).unwrap().lines().next().unwrap()).unwrap();
    for key in ["epoch", "candidate_id", "origin_id", "operator", "loss", "selected"] {
        assert!(first.get(key).is_some(), "{key}");
    }
    let ids = select(&space.candidates, &cfg(Strategy::MaxLoss, 3)).unwrap();
    assert_eq!(ids, picked.iter().map(|&i| space.candidates[i].id.clone()).collect::<Vec<_>>());
}

/// Full-sort oracle: order every index by the reference total order and
/// take a prefix.
fn oracle(losses: &[f64], k: usize, max: bool) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = losses.iter().cloned().zip(0..).collect();
    keyed.sort_by(|a, b| {
        let by_loss = if max { b.0.partial_cmp(&a.0) } else { a.0.partial_cmp(&b.0) };
        by_loss.unwrap().then(a.1.cmp(&b.1))
    });
    keyed.into_iter().take(k).map(|(_, i)| i).collect()
}

proptest! {
    #[test]
    fn matches_sort_oracle(raw in proptest::collection::vec(0u8..20, 1..120), k in 1usize..150) {
        // Coarse values force many ties.
        let losses: Vec<f64> = raw.iter().map(|v| *v as f64 / 4.0).collect();
        let wrapped: Vec<Option<f64>> = losses.iter().map(|l| Some(*l)).collect();
        prop_assert_eq!(select_indices(&wrapped, &cfg(Strategy::MaxLoss, k)).unwrap(), oracle(&losses, k, true));
        prop_assert_eq!(select_indices(&wrapped, &cfg(Strategy::MinLoss, k)).unwrap(), oracle(&losses, k, false));
    }

    #[test]
    fn random_is_a_seeded_subset(n in 1usize..200, k in 1usize..250, seed in any::<u64>()) {
        let losses = vec![None; n];
        let c = SelectionConfig { seed, ..cfg(Strategy::Random, k) };
        let a = select_indices(&losses, &c).unwrap();
        prop_assert_eq!(&a, &select_indices(&losses, &c).unwrap());
        prop_assert_eq!(a.len(), k.min(n));
        let set: std::collections::BTreeSet<_> = a.iter().collect();
        prop_assert_eq!(set.len(), a.len());
        prop_assert!(a.iter().all(|i| *i < n));
    }

    #[test]
    fn full_k_returns_everything(raw in proptest::collection::vec(0u8..5, 1..60)) {
        let wrapped: Vec<Option<f64>> = raw.iter().map(|v| Some(*v as f64)).collect();
        for s in [Strategy::MaxLoss, Strategy::MinLoss, Strategy::Random] {
            let mut got = select_indices(&wrapped, &cfg(s, raw.len())).unwrap();
            got.sort_unstable();
            prop_assert_eq!(got, (0..raw.len()).collect::<Vec<_>>());
        }
    }
}
