mod common;

use bbgky::SharedMemo;
use bbgky_core::{derive, DerivationMemo, ExpansionMode};
use common::*;

#[test]
fn shared_memo_matches_private_memos() {
    let spec = spec(SYSTEM_2);
    let targets: Vec<&str> = SYSTEM_2_THIRD.iter().chain(SYSTEM_2_FOURTH.iter()).copied().collect();
    for mode in [ExpansionMode::SingleCorrelation, ExpansionMode::Ursell] {
        let memo = SharedMemo::new(mode);
        let shared: Vec<_> = std::thread::scope(|s| {
            let hs: Vec<_> = (0..4)
                .flat_map(|_| targets.iter())
                .map(|t| {
                    let memo = &memo;
                    let spec = &spec;
                    s.spawn(move || derive(spec, &labels(t), &mut &*memo).unwrap())
                })
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        for (i, eq) in shared.iter().enumerate() {
            let t = targets[i % targets.len()];
            let private = derive(&spec, &labels(t), &mut DerivationMemo::new(mode)).unwrap();
            assert_eq!(eq, &private, "{t}");
        }
        assert!(!memo.is_empty());
    }
}
