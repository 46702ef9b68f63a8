use proptest::prelude::*;
use rooplpp::heap::FreeListSnapshot;
use rooplpp::{HeapConfig, HeapError, MemoryImage};

fn image(n: u32) -> MemoryImage {
    MemoryImage::new(&HeapConfig {
        num_freelists: n,
        stack_words: 64,
        ..HeapConfig::default()
    })
    .unwrap()
}

#[derive(Debug, Clone)]
enum Op {
    Alloc(usize),
    /// Frees the live block at this position modulo the live count.
    Free(usize),
}

fn op() -> impl Strategy<Value = Op> {
    prop_oneof![(1usize..=20).prop_map(Op::Alloc), (0usize..64).prop_map(Op::Free)]
}

/// Checks alignment, disjointness and conservation against the blocks the
/// test believes are live.
fn check_invariants(mem: &MemoryImage, live: &[(usize, usize)]) -> Result<(), TestCaseError> {
    let snap = mem
        .snapshot_free_lists()
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let hp = mem.hp();
    let mut blocks: Vec<(usize, usize)> = live.to_vec();
    for (class, list) in snap.lists.iter().enumerate() {
        let size = FreeListSnapshot::block_size(class);
        for &a in list {
            prop_assert_eq!((a - hp) % size, 0, "free block {} misaligned for size {}", a, size);
            blocks.push((a, size));
        }
    }
    for &(a, size) in live {
        prop_assert_eq!((a - hp) % size, 0, "live block {} misaligned", a);
    }
    blocks.sort();
    for w in blocks.windows(2) {
        prop_assert!(w[0].0 + w[0].1 <= w[1].0, "blocks overlap: {:?} {:?}", w[0], w[1]);
    }
    let total: usize = blocks.iter().map(|b| b.1).sum();
    prop_assert_eq!(total, mem.top_block_size());
    prop_assert!(blocks.iter().all(|&(a, s)| a >= hp && a + s <= mem.heap_end()));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lifo_frees_restore_the_initial_image(ops in prop::collection::vec((any::<bool>(), 1usize..=24), 0..200)) {
        let mut mem = image(7);
        let initial = mem.clone();
        let mut stack: Vec<(usize, usize)> = Vec::new();
        for (push, size) in ops {
            if push || stack.is_empty() {
                match mem.malloc(size) {
                    Ok(a) => stack.push((a, size)),
                    Err(HeapError::OutOfMemory(_)) => {}
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                }
            } else {
                let (a, size) = stack.pop().unwrap();
                mem.free(a, size).unwrap();
            }
        }
        while let Some((a, size)) = stack.pop() {
            mem.free(a, size).unwrap();
        }
        prop_assert_eq!(mem.snapshot_free_lists().unwrap(), initial.snapshot_free_lists().unwrap());
        prop_assert!(mem == initial);
    }

    #[test]
    fn arbitrary_orders_keep_invariants(ops in prop::collection::vec(op(), 0..200)) {
        let mut mem = image(6);
        let mut live: Vec<(usize, usize)> = Vec::new();
        for op in ops {
            match op {
                Op::Alloc(size) => {
                    let before = mem.clone();
                    match mem.malloc(size) {
                        Ok(a) => live.push((a, MemoryImage::block_size(size))),
                        Err(HeapError::OutOfMemory(_)) => prop_assert!(mem == before, "failed malloc changed memory"),
                        Err(e) => return Err(TestCaseError::fail(e.to_string())),
                    }
                }
                Op::Free(i) if !live.is_empty() => {
                    let (a, size) = live.remove(i % live.len());
                    mem.free(a, size).unwrap();
                }
                Op::Free(_) => {}
            }
            check_invariants(&mem, &live)?;
        }
        for (a, size) in live.drain(..) {
            mem.free(a, size).unwrap();
        }
        check_invariants(&mem, &[])?;
        prop_assert_eq!(mem.snapshot_free_lists().unwrap().total_free_words(), mem.top_block_size());
    }

    #[test]
    fn malloc_then_free_is_identity(prefix in prop::collection::vec(1usize..=16, 0..20), size in 1usize..=16) {
        let mut mem = image(7);
        for s in prefix {
            let _ = mem.malloc(s);
        }
        let before = mem.clone();
        if let Ok(a) = mem.malloc(size) {
            mem.free(a, size).unwrap();
        }
        prop_assert!(mem == before);
    }
}

#[test]
fn non_opposite_deallocation_leaves_equivalent_garbage() {
    let mut mem = image(4);
    let hp = mem.hp();
    let initial = mem.snapshot_free_lists().unwrap();
    let first = mem.malloc(2).unwrap();
    let eight = mem.malloc(8).unwrap();
    let four = mem.malloc(4).unwrap();
    let second = mem.malloc(2).unwrap();
    assert_eq!((first, eight, four, second), (hp + 14, hp, hp + 8, hp + 12));
    for (a, s) in [(first, 2), (eight, 8), (four, 4), (second, 2)] {
        mem.free(a, s).unwrap();
    }
    let after = mem.snapshot_free_lists().unwrap();
    assert_ne!(after, initial);
    assert_eq!(
        after.lists,
        vec![vec![hp + 12, hp + 14], vec![hp + 8], vec![hp], vec![]]
    );
    assert_eq!(after.total_free_words(), 16);
}
