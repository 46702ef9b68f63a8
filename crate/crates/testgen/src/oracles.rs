//! Plain Rust reimplementations of the corpus programs, plus helpers to read
//! the interpreter's results back out of the heap.

use std::collections::{HashMap, VecDeque};
use std::path::PathBuf;

use rooplpp::{ClassMap, MemoryImage};

pub const CORPUS: &[&str] = &["Fibonacci", "LinkedList", "BinaryTree", "DoublyLinkedList", "RTM"];

pub fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../core/corpus/{name}.rplpp"))
}

/// Read-only view of a memory image that resolves field names through the
/// runtime class of each object.
pub struct HeapView<'a> {
    pub mem: &'a MemoryImage,
    pub classes: &'a ClassMap,
}

impl HeapView<'_> {
    pub fn word(&self, addr: i64) -> i64 {
        self.mem.read_word(addr).expect("address in range")
    }

    pub fn field(&self, obj: i64, name: &str) -> i64 {
        let class = self.classes.by_id(self.word(obj)).expect("object header");
        self.word(obj + class.layout.field_offsets[name] as i64)
    }

    pub fn array(&self, arr: i64) -> Vec<i64> {
        (0..self.word(arr)).map(|i| self.word(arr + 2 + i)).collect()
    }

    /// Values of `value_field` along the chain `start`, `start.next`, ...
    pub fn chain(&self, start: i64, next: &str, value_field: &str) -> Vec<i64> {
        let mut out = vec![];
        let mut cell = start;
        while cell != 0 {
            out.push(self.field(cell, value_field));
            cell = self.field(cell, next);
        }
        out
    }

    /// Preorder walk of a binary tree with `None` for nil children.
    pub fn tree(&self, node: i64, out: &mut Vec<Option<i64>>) {
        if node == 0 {
            out.push(None);
            return;
        }
        out.push(Some(self.field(node, "value")));
        self.tree(self.field(node, "left"), out);
        self.tree(self.field(node, "right"), out);
    }
}

/// `(fib(n+1), fib(n+2))` with `fib(1) = fib(2) = 1`.
pub fn fibonacci_pair(n: u32) -> (i64, i64) {
    let (mut a, mut b) = (1i64, 1i64);
    for _ in 0..n {
        (a, b) = (b, a + b);
    }
    (a, b)
}

/// Cell data of the LinkedList program: `i*i+1`, even `i` appended, odd `i`
/// prepended.
pub fn linked_list(cells: i64) -> Vec<i64> {
    let mut list = VecDeque::new();
    for i in 0..cells {
        let v = i * i + 1;
        if i % 2 == 0 {
            list.push_back(v);
        } else {
            list.push_front(v);
        }
    }
    list.into()
}

/// `(index, data)` of each DoublyLinkedList cell in list order.
pub fn doubly_linked_list(cells: i64) -> Vec<(i64, i64)> {
    (0..cells).map(|i| (i, 10 * i + 3)).collect()
}

/// Values inserted by the BinaryTree program.
pub fn binary_tree_values() -> Vec<i64> {
    (1..=8).map(|i| i * 37 % 101).collect()
}

#[derive(Debug, Default)]
pub struct Bst(Option<Box<BstNode>>);

#[derive(Debug)]
struct BstNode {
    value: i64,
    left: Bst,
    right: Bst,
}

impl Bst {
    pub fn from_values(values: &[i64]) -> Bst {
        let mut t = Bst::default();
        for &v in values {
            t.insert(v);
        }
        t
    }

    pub fn insert(&mut self, v: i64) {
        match &mut self.0 {
            None => {
                self.0 = Some(Box::new(BstNode {
                    value: v,
                    left: Bst::default(),
                    right: Bst::default(),
                }))
            }
            Some(n) if v < n.value => n.left.insert(v),
            Some(n) => n.right.insert(v),
        }
    }

    pub fn mirror(&mut self) {
        if let Some(n) = &mut self.0 {
            std::mem::swap(&mut n.left, &mut n.right);
            n.left.mirror();
            n.right.mirror();
        }
    }

    pub fn sum(&self) -> i64 {
        self.0.as_ref().map_or(0, |n| n.value + n.left.sum() + n.right.sum())
    }

    /// Preorder walk in the same format as [`HeapView::tree`].
    pub fn walk(&self) -> Vec<Option<i64>> {
        let mut out = vec![];
        self.walk_into(&mut out);
        out
    }

    fn walk_into(&self, out: &mut Vec<Option<i64>>) {
        match &self.0 {
            None => out.push(None),
            Some(n) => {
                out.push(Some(n.value));
                n.left.walk_into(out);
                n.right.walk_into(out);
            }
        }
    }
}

/// Tape symbols: 0 blank, 1 the digit '0', 2 the digit '1'.
pub const SLASH: i64 = 3;
pub const RIGHT: i64 = 1;
pub const LEFT: i64 = 2;

/// Binary increment on a little-endian tape, in quadruple form
/// `(q1, s1, s2, q2)`. `s1 = SLASH` shifts the head by `s2`.
pub const INCREMENT_RULES: [(i64, i64, i64, i64); 7] = [
    (1, 0, 0, 2),
    (2, SLASH, RIGHT, 3),
    (3, 1, 2, 4),
    (3, 2, 1, 2),
    (4, SLASH, LEFT, 5),
    (5, 1, 1, 4),
    (5, 0, 0, 6),
];

/// Runs a deterministic quadruple machine with the head on the blank before
/// `input`. Returns the non-blank tape from the first input cell and the step count.
pub fn simulate_rtm(rules: &[(i64, i64, i64, i64)], input: &[i64], start: i64, stop: i64) -> (Vec<i64>, usize) {
    let mut tape: HashMap<i64, i64> = input.iter().enumerate().map(|(i, &s)| (i as i64 + 1, s)).collect();
    let (mut head, mut state, mut steps) = (0i64, start, 0);
    while state != stop {
        let sym = tape.get(&head).copied().unwrap_or(0);
        let &(_, s1, s2, q2) = rules
            .iter()
            .find(|r| r.0 == state && (r.1 == SLASH || r.1 == sym))
            .expect("no applicable rule");
        if s1 == SLASH {
            head += if s2 == RIGHT { 1 } else { -1 };
        } else {
            tape.insert(head, s2);
        }
        state = q2;
        steps += 1;
    }
    let last = tape.iter().filter(|(_, &s)| s != 0).map(|(&p, _)| p).max().unwrap_or(0);
    ((1..=last).map(|p| tape.get(&p).copied().unwrap_or(0)).collect(), steps)
}

pub fn decode_tape(symbols: &[i64]) -> String {
    symbols
        .iter()
        .map(|s| match s {
            1 => '0',
            2 => '1',
            _ => '_',
        })
        .collect()
}

/// Little-endian binary string as tape symbols.
pub fn encode_tape(bits: &str) -> Vec<i64> {
    bits.chars().map(|c| if c == '1' { 2 } else { 1 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increment_adds_one() {
        // 1101 little endian is 11; 12 is 0011.
        let (tape, _) = simulate_rtm(&INCREMENT_RULES, &encode_tape("1101"), 1, 6);
        assert_eq!(decode_tape(&tape), "0011");
        let (tape, _) = simulate_rtm(&INCREMENT_RULES, &encode_tape("0"), 1, 6);
        assert_eq!(decode_tape(&tape), "1");
    }

    #[test]
    fn mirror_twice_is_identity() {
        let mut t = Bst::from_values(&binary_tree_values());
        let walk = t.walk();
        t.mirror();
        assert_ne!(t.walk(), walk);
        t.mirror();
        assert_eq!(t.walk(), walk);
    }
}
