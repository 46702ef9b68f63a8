use std::collections::HashMap;

use rooplpp::syntax::{parse, pretty_print};
use rooplpp::typing::find_main;
use rooplpp::{
    build_class_map, check_program, invert_program, ClassMap, Direction, Machine, MachineConfig, MemoryImage, Program,
};
use rooplpp_testgen::oracles::*;

fn load(name: &str) -> (Program, ClassMap, String) {
    let src = std::fs::read_to_string(corpus_path(name)).unwrap();
    let p = parse(&src).unwrap_or_else(|e| panic!("{name}: {e}"));
    let classes = build_class_map(&p).unwrap();
    let main = find_main(&p).unwrap();
    (p, classes, main)
}

struct Run<'c> {
    machine: Machine<'c>,
    classes: &'c ClassMap,
    fields: HashMap<String, i64>,
    main_addr: i64,
}

fn run<'c>(classes: &'c ClassMap, main: &str) -> Run<'c> {
    let mut machine = Machine::new(classes, MachineConfig::default()).unwrap();
    let out = machine
        .run_main(main, Direction::Forward)
        .unwrap_or_else(|e| panic!("{e}"));
    Run {
        machine,
        classes,
        fields: out.fields.into_iter().collect(),
        main_addr: out.main_addr,
    }
}

impl Run<'_> {
    fn heap(&self) -> HeapView<'_> {
        HeapView {
            mem: &self.machine.mem,
            classes: self.classes,
        }
    }

    fn refcounts_consistent(&self) {
        for (addr, stored, counted) in self.machine.reference_census(self.main_addr).unwrap() {
            assert_eq!(stored, counted as i64, "refcount at {addr}");
        }
    }
}

/// Memory of a fresh machine with only the main object in place.
fn initial_image(classes: &ClassMap, main: &str) -> MemoryImage {
    let mut m = Machine::new(classes, MachineConfig::default()).unwrap();
    m.alloc_main(classes.get(main).unwrap()).unwrap();
    m.mem
}

#[test]
fn corpus_type_checks_and_round_trips() {
    for name in CORPUS {
        let (p, classes, _) = load(name);
        check_program(&p, &classes).unwrap_or_else(|e| panic!("{name}: {}", e[0]));
        let printed = pretty_print(&p);
        assert_eq!(parse(&printed).unwrap(), p, "{name}");

        let inv = invert_program(&p);
        let reparsed = parse(&pretty_print(&inv)).unwrap();
        assert_eq!(reparsed, inv, "{name}");
        let inv_classes = build_class_map(&inv).unwrap();
        check_program(&inv, &inv_classes).unwrap_or_else(|e| panic!("{name} inverted: {}", e[0]));
    }
}

#[test]
fn corpus_runs_backward_to_the_initial_state() {
    for name in CORPUS {
        let (_, classes, main) = load(name);
        let mut r = run(&classes, &main);
        r.refcounts_consistent();
        r.machine.resume_main(&main, Direction::Backward).unwrap();
        assert!(r.machine.mem == initial_image(&classes, &main), "{name}");
    }
}

#[test]
fn inverted_programs_undo_the_originals() {
    for name in CORPUS {
        let (p, classes, main) = load(name);
        let after = run(&classes, &main).machine.mem;
        let inv = invert_program(&p);
        let inv_classes = build_class_map(&inv).unwrap();
        let mut m = Machine::with_memory(&inv_classes, after, MachineConfig::default());
        m.resume_main(&main, Direction::Forward).unwrap();
        assert!(m.mem == initial_image(&classes, &main), "{name}");
    }
}

#[test]
fn fibonacci_matches_iteration() {
    let (_, classes, main) = load("Fibonacci");
    let r = run(&classes, &main);
    let (a, b) = fibonacci_pair(4);
    assert_eq!((r.fields["x1"], r.fields["x2"], r.fields["n"]), (a, b, 0));
}

#[test]
fn linked_list_matches_a_deque() {
    let (_, classes, main) = load("LinkedList");
    let r = run(&classes, &main);
    let oracle = linked_list(10);
    assert_eq!(r.fields["length"], oracle.len() as i64);
    assert_eq!(r.fields["sum"], oracle.iter().sum::<i64>());

    let h = r.heap();
    let list = r.fields["list"];
    assert_eq!(h.field(list, "listLength"), 10);
    assert_eq!(h.chain(h.field(list, "head"), "next", "data"), oracle);
    r.refcounts_consistent();
}

#[test]
fn binary_tree_matches_a_boxed_tree() {
    let (_, classes, main) = load("BinaryTree");
    let mut r = run(&classes, &main);
    let mut oracle = Bst::from_values(&binary_tree_values());
    let total = oracle.sum();
    assert_eq!(r.fields["sum"], total);
    assert_eq!(r.fields["mirroredSum"], total);

    // The program leaves the tree mirrored once.
    let tree = r.fields["tree"];
    oracle.mirror();
    let mut got = vec![];
    r.heap().tree(r.heap().field(tree, "root"), &mut got);
    assert_eq!(got, oracle.walk());

    // Mirroring again restores the original shape and keeps the sum.
    r.machine.call_method(tree, "mirror", Direction::Forward).unwrap();
    oracle.mirror();
    let mut got = vec![];
    r.heap().tree(r.heap().field(tree, "root"), &mut got);
    assert_eq!(got, oracle.walk());
    assert_eq!(got.iter().flatten().sum::<i64>(), total);
    r.refcounts_consistent();
}

#[test]
fn doubly_linked_list_indexes_and_links() {
    let (_, classes, main) = load("DoublyLinkedList");
    let r = run(&classes, &main);
    let oracle = doubly_linked_list(6);
    assert_eq!(r.fields["length"], oracle.len() as i64);

    let h = r.heap();
    let mut cell = h.field(r.fields["list"], "head");
    let mut prev = 0;
    let mut seen = vec![];
    while cell != 0 {
        seen.push((h.field(cell, "index"), h.field(cell, "data")));
        assert_eq!(h.field(cell, "left"), prev);
        assert_eq!(h.field(cell, "self"), cell);
        prev = cell;
        cell = h.field(cell, "right");
    }
    assert_eq!(seen, oracle);
    r.refcounts_consistent();
}

#[test]
fn rtm_increments_its_tape() {
    let (_, classes, main) = load("RTM");
    let r = run(&classes, &main);
    let (tape, steps) = simulate_rtm(&INCREMENT_RULES, &encode_tape("1101"), 1, 6);
    assert_eq!(decode_tape(&tape), "0011");

    let h = r.heap();
    let (q1, s1, s2, q2) = (
        h.array(r.fields["q1"]),
        h.array(r.fields["s1"]),
        h.array(r.fields["s2"]),
        h.array(r.fields["q2"]),
    );
    let stored: Vec<_> = (0..7).map(|i| (q1[i], s1[i], s2[i], q2[i])).collect();
    assert_eq!(stored, INCREMENT_RULES);

    assert_eq!(r.fields["state"], 6);
    assert_eq!(r.fields["steps"], steps as i64);
    assert_eq!((r.fields["sym"], r.fields["done"]), (0, 0));

    // Head back on the blank left of the number, the digits on the right stack.
    let t = r.fields["tape"];
    assert_eq!(h.field(t, "lsize"), 0);
    let right = h.chain(h.field(h.field(t, "right"), "top"), "next", "value");
    assert_eq!(h.field(t, "rsize"), right.len() as i64);
    assert_eq!(decode_tape(&right), "0011");
    r.refcounts_consistent();
}
