use proptest::prelude::*;

use extbwt::ext::{Phase, Store};
use extbwt::merge::{compute_q_columns, init_merge_state, MergeOptions};
use extbwt::oracle::{direct_bwt_lcp, oracle_all, q_column};
use extbwt::{build, build_columns, partition_suffixes, Alphabet, BuildOptions, PartitionOptions, StringCollection};

fn instance() -> impl Strategy<Value = StringCollection> {
    (1usize..=8, 1usize..=4, prop_oneof![Just(2usize), Just(4usize)]).prop_flat_map(|(k, m, sigma)| {
        proptest::collection::vec(proptest::collection::vec(1..=sigma as u8, k), m).prop_map(
            move |strings| StringCollection::from_codes(Alphabet::new(&"ACGT"[..sigma]).unwrap(), strings).unwrap(),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn build_matches_both_reference_routes(coll in instance(), buffer in 1usize..64) {
        let dir = tempfile::tempdir().unwrap();
        let opts = BuildOptions { buffer_size: buffer, ..BuildOptions::default() };
        let (store, out) = build(&coll, dir.path(), &opts).unwrap();
        let oracle = oracle_all(&coll).unwrap();
        let (bwt, lcp) = direct_bwt_lcp(&coll).unwrap();
        let emit = store.with_phase(Phase::Emit);
        prop_assert_eq!(out.bwt_codes(&emit).unwrap(), oracle.bwt.clone());
        prop_assert_eq!(out.lcp_values(&emit).unwrap(), oracle.lcp.clone());
        prop_assert_eq!(oracle.bwt, bwt);
        prop_assert_eq!(oracle.lcp, lcp);
    }

    #[test]
    fn rolling_and_kept_runs_agree(coll in instance()) {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let (_, a) = build(&coll, d1.path(), &BuildOptions::default()).unwrap();
        let kept = BuildOptions { rolling: false, verify_permutations: true, spill_threshold: 0, ..BuildOptions::default() };
        let (_, b) = build(&coll, d2.path(), &kept).unwrap();
        prop_assert_eq!(std::fs::read(a.bwt.path()).unwrap(), std::fs::read(b.bwt.path()).unwrap());
        prop_assert_eq!(std::fs::read(a.lcp.path()).unwrap(), std::fs::read(b.lcp.path()).unwrap());
        prop_assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn q_columns_match_their_definition(coll in instance()) {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path(), 16).unwrap();
        let cm = build_columns(&coll, &store).unwrap();
        let b = partition_suffixes(&cm, &store, PartitionOptions::default()).unwrap();
        let opts = MergeOptions { rolling: false, ..MergeOptions::default() };
        let mut q = init_merge_state(&b, &store, opts).unwrap().q().clone();
        for p in 1..=coll.k() {
            prop_assert_eq!(q.p(), p);
            for l in p..=coll.k() {
                let col = q.column(l).expect("column present");
                prop_assert_eq!(store.read_all(col).unwrap(), q_column(&coll, l, p));
            }
            q = compute_q_columns(&b, &q, &store, opts).unwrap();
        }
    }
}

#[test]
fn dropped_files_are_gone_in_rolling_mode() {
    let alphabet = Alphabet::dna();
    let coll = extbwt::validate_collection(&["ACGTAC", "TTGACA", "ACGTAC"], &alphabet).unwrap();
    let dir = tempfile::tempdir().unwrap();
    build(&coll, dir.path(), &BuildOptions::default()).unwrap();
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert!(names.iter().all(|n| !n.starts_with("N_") && !n.starts_with("S_") && !n.starts_with("Q_")));
    assert!(names.contains(&"BWT_final.bin".to_string()));
    assert!(names.contains(&"LCP_final.bin".to_string()));
}
