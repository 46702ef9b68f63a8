//! Word-addressed memory with a reversible buddy allocator.
//!
//! Layout of the word array:
//!
//! ```text
//! 0            nil, never allocated
//! flp..hp      one head word per free list; list i holds blocks of 2^(i+1) words
//! hp..heap_end heap blocks, initially one block of 2^num_freelists words
//! ..len        frame region, grows downward from the top
//! ```
//!
//! `malloc` transcribes the recursive `malloc1` procedure of the reversible
//! buddy algorithm statement by statement; `free` runs the same procedure
//! backwards.

use std::fmt::Write as _;

use thiserror::Error;

/// Machine word width. Words are stored as `i64` and kept sign-extended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WordWidth {
    W16,
    W32,
    W64,
}

impl WordWidth {
    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            16 => Some(WordWidth::W16),
            32 => Some(WordWidth::W32),
            64 => Some(WordWidth::W64),
            _ => None,
        }
    }

    pub fn bits(self) -> u32 {
        match self {
            WordWidth::W16 => 16,
            WordWidth::W32 => 32,
            WordWidth::W64 => 64,
        }
    }

    /// Truncates `v` to the width and sign-extends it back.
    pub fn wrap(self, v: i64) -> i64 {
        match self {
            WordWidth::W16 => v as i16 as i64,
            WordWidth::W32 => v as i32 as i64,
            WordWidth::W64 => v,
        }
    }

    pub fn max_value(self) -> i64 {
        match self {
            WordWidth::W16 => i16::MAX as i64,
            WordWidth::W32 => i32::MAX as i64,
            WordWidth::W64 => i64::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeapConfig {
    pub num_freelists: u32,
    pub word_width: WordWidth,
    /// Words reserved above the initial heap for frames and heap growth.
    pub stack_words: usize,
    pub grow: bool,
}

impl Default for HeapConfig {
    fn default() -> Self {
        HeapConfig {
            num_freelists: 10,
            word_width: WordWidth::W32,
            stack_words: 4096,
            grow: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HeapError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("address {0} out of bounds")]
    AddressFault(i64),
    #[error("access through nil")]
    NilFault,
    #[error("out of memory allocating {0} words")]
    OutOfMemory(usize),
    #[error("corrupt free of block {addr}: {reason}")]
    CorruptFree { addr: i64, reason: String },
    #[error("frame region collided with the heap")]
    StackOverflow,
}

type Result<T> = std::result::Result<T, HeapError>;

/// Free blocks per size class, in list order. Entry `i` holds blocks of
/// `2^(i+1)` words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeListSnapshot {
    pub lists: Vec<Vec<usize>>,
}

impl FreeListSnapshot {
    pub fn block_size(class: usize) -> usize {
        1 << (class + 1)
    }

    pub fn total_free_words(&self) -> usize {
        self.lists
            .iter()
            .enumerate()
            .map(|(i, l)| l.len() * Self::block_size(i))
            .sum()
    }

    /// Non-empty size classes as block sizes, largest first.
    pub fn shape(&self) -> Vec<usize> {
        (0..self.lists.len())
            .rev()
            .filter(|&i| !self.lists[i].is_empty())
            .map(Self::block_size)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MemoryImage {
    words: Vec<i64>,
    width: WordWidth,
    num_freelists: usize,
    flp: usize,
    hp: usize,
    heap_end: usize,
    frame_top: usize,
    grow: bool,
}

impl MemoryImage {
    pub fn new(config: &HeapConfig) -> Result<Self> {
        if config.num_freelists < 2 {
            return Err(HeapError::Config(format!(
                "need at least 2 free lists, got {}",
                config.num_freelists
            )));
        }
        if config.num_freelists > 40 {
            return Err(HeapError::Config(format!(
                "{} free lists is too many",
                config.num_freelists
            )));
        }
        let n = config.num_freelists as usize;
        let flp = 1;
        let hp = flp + n;
        let heap_end = hp + (1 << n);
        let len = heap_end + config.stack_words;
        if len as u128 > config.word_width.max_value() as u128 {
            return Err(HeapError::Config(format!(
                "{len} words are not addressable with {}-bit words",
                config.word_width.bits()
            )));
        }
        let mut words = vec![0; len];
        words[flp + n - 1] = hp as i64;
        Ok(MemoryImage {
            words,
            width: config.word_width,
            num_freelists: n,
            flp,
            hp,
            heap_end,
            frame_top: len,
            grow: config.grow,
        })
    }

    pub fn width(&self) -> WordWidth {
        self.width
    }
    pub fn num_freelists(&self) -> usize {
        self.num_freelists
    }
    pub fn flp(&self) -> usize {
        self.flp
    }
    pub fn hp(&self) -> usize {
        self.hp
    }
    pub fn heap_end(&self) -> usize {
        self.heap_end
    }
    pub fn frame_top(&self) -> usize {
        self.frame_top
    }
    pub fn len(&self) -> usize {
        self.words.len()
    }
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
    pub fn words(&self) -> &[i64] {
        &self.words
    }
    pub fn top_block_size(&self) -> usize {
        1 << self.num_freelists
    }

    fn index(&self, addr: i64) -> Result<usize> {
        if addr == 0 {
            return Err(HeapError::NilFault);
        }
        if addr < 0 || addr as usize >= self.words.len() {
            return Err(HeapError::AddressFault(addr));
        }
        Ok(addr as usize)
    }

    pub fn read_word(&self, addr: i64) -> Result<i64> {
        Ok(self.words[self.index(addr)?])
    }

    pub fn write_word(&mut self, addr: i64, value: i64) -> Result<()> {
        let i = self.index(addr)?;
        self.words[i] = self.width.wrap(value);
        Ok(())
    }

    /// Smallest power of two that is at least `max(osize, 2)`.
    pub fn block_size(osize: usize) -> usize {
        osize.max(2).next_power_of_two()
    }

    /// Pushes `n` zeroed words onto the frame region and returns the lowest
    /// address of the new slot.
    pub fn push_frame(&mut self, n: usize) -> Result<usize> {
        if self.frame_top < self.heap_end + n {
            return Err(HeapError::StackOverflow);
        }
        self.frame_top -= n;
        Ok(self.frame_top)
    }

    /// Pops `n` words. The caller must have cleared them.
    pub fn pop_frame(&mut self, n: usize) {
        debug_assert!(self.words[self.frame_top..self.frame_top + n].iter().all(|&w| w == 0));
        self.frame_top += n;
    }

    pub fn malloc(&mut self, osize: usize) -> Result<usize> {
        let osize_w = osize.max(1) as i64;
        if Self::block_size(osize) > self.top_block_size() {
            return Err(HeapError::OutOfMemory(osize));
        }
        let mut p = 0i64;
        let mut counter = 0usize;
        let mut csize = 2i64;
        self.malloc1(&mut p, osize_w, &mut counter, &mut csize)?;
        debug_assert_eq!((counter, csize), (0, 2));
        Ok(p as usize)
    }

    pub fn free(&mut self, addr: usize, osize: usize) -> Result<()> {
        let size = Self::block_size(osize);
        let corrupt = |reason: &str| HeapError::CorruptFree {
            addr: addr as i64,
            reason: reason.to_string(),
        };
        if size > self.top_block_size() {
            return Err(corrupt("size exceeds the largest block"));
        }
        if addr < self.hp || addr + size > self.heap_end || !(addr - self.hp).is_multiple_of(size) {
            return Err(corrupt("not an aligned heap block"));
        }
        if self.words[addr..addr + size].iter().any(|&w| w != 0) {
            return Err(corrupt("block is not zero-cleared"));
        }
        let mut p = addr as i64;
        let mut counter = 0usize;
        let mut csize = 2i64;
        self.unmalloc1(&mut p, osize.max(1) as i64, &mut counter, &mut csize)?;
        if p != 0 {
            return Err(corrupt("inverse allocation did not consume the address"));
        }
        Ok(())
    }

    // The allocator's inner conditional is
    //
    //   if freelists[counter] != 0 then <pop head> else <split parent> fi A
    //   A = freelists[counter] = 0 || p - csize != freelists[counter]
    //
    // A is false after a split (the left half sits alone at the head) and is
    // meant to be true after a pop. Backwards, A picks the branch: false
    // reverses the split (a merge), true reverses the pop (a push).
    //
    // A alone would merge with a head partner that still links to further
    // blocks, dropping them. Splits only ever leave the left half as the sole
    // list element, aligned to the parent size, and never split the top
    // class, so the merge condition is strengthened to exactly that state:
    //
    //   merge = counter < n-1 && fl != 0 && fl = p - csize
    //           && M(fl) = 0 && (fl - hp) mod 2*csize = 0
    //   A'    = !merge
    fn split_partner_at_head(&self, p: i64, counter: usize, csize: i64) -> bool {
        if counter + 1 >= self.num_freelists {
            return false;
        }
        let head = self.words[self.flp + counter];
        head != 0 && head == p - csize && self.words[head as usize] == 0 && (head - self.hp as i64) % (2 * csize) == 0
    }

    fn malloc1(&mut self, p: &mut i64, osize: i64, counter: &mut usize, csize: &mut i64) -> Result<()> {
        if *csize < osize {
            self.ascend(p, osize, counter, csize)?;
            return Ok(());
        }
        let fl = self.flp + *counter;
        if self.words[fl] == 0 && *counter + 1 == self.num_freelists {
            self.grow_heap(osize)?;
        }
        let popped = self.words[fl] != 0;
        if popped {
            *p += self.words[fl];
            self.words[fl] -= *p;
            let at = *p as usize;
            self.words.swap(fl, at);
        } else {
            self.ascend(p, osize, counter, csize)?;
            self.words[fl] += *p;
            *p += *csize;
        }
        if self.split_partner_at_head(*p, *counter, *csize) == popped {
            return Err(HeapError::CorruptFree {
                addr: *p,
                reason: "allocator exit assertion failed".into(),
            });
        }
        Ok(())
    }

    fn ascend(&mut self, p: &mut i64, osize: i64, counter: &mut usize, csize: &mut i64) -> Result<()> {
        if *counter + 1 >= self.num_freelists {
            return Err(HeapError::OutOfMemory(osize as usize));
        }
        *counter += 1;
        *csize <<= 1;
        let r = self.malloc1(p, osize, counter, csize);
        *csize >>= 1;
        *counter -= 1;
        r
    }

    fn grow_heap(&mut self, osize: i64) -> Result<()> {
        let top = self.top_block_size();
        if !self.grow || self.heap_end + top > self.frame_top {
            return Err(HeapError::OutOfMemory(osize as usize));
        }
        self.words[self.flp + self.num_freelists - 1] = self.heap_end as i64;
        self.heap_end += top;
        Ok(())
    }

    /// `uncall malloc1`: the statements of `malloc1` inverted and reversed.
    fn unmalloc1(&mut self, p: &mut i64, osize: i64, counter: &mut usize, csize: &mut i64) -> Result<()> {
        // Outer conditional: csize < osize is both entry test and exit
        // assertion and the branch leaves csize untouched.
        if *csize < osize {
            if *counter + 1 >= self.num_freelists {
                return Err(HeapError::CorruptFree {
                    addr: *p,
                    reason: "size exceeds the largest block".into(),
                });
            }
            *counter += 1;
            *csize <<= 1;
            let r = self.unmalloc1(p, osize, counter, csize);
            *csize >>= 1;
            *counter -= 1;
            return r;
        }
        let fl = self.flp + *counter;
        let merge = self.split_partner_at_head(*p, *counter, *csize);
        if !merge {
            // Inverse of the pop: swap back, then fl -= p and p += fl undone.
            let at = *p as usize;
            self.words.swap(fl, at);
            if self.words[fl] != 0 {
                return Err(HeapError::CorruptFree {
                    addr: *p,
                    reason: "first block word not zero".into(),
                });
            }
            self.words[fl] += *p;
            *p -= self.words[fl];
            // Entry test must have been true.
            if self.words[fl] == 0 {
                return Err(HeapError::CorruptFree {
                    addr: *p,
                    reason: "free list head is nil after push".into(),
                });
            }
        } else {
            // Inverse of the split: p -= csize, fl -= p, then undo the
            // recursive allocation of the parent block.
            *p -= *csize;
            self.words[fl] -= *p;
            *counter += 1;
            *csize <<= 1;
            let r = self.unmalloc1(p, osize, counter, csize);
            *csize >>= 1;
            *counter -= 1;
            r?;
            // Entry test must have been false.
            if self.words[fl] != 0 {
                return Err(HeapError::CorruptFree {
                    addr: *p,
                    reason: "free list not empty after merge".into(),
                });
            }
        }
        Ok(())
    }

    /// Walks every free list. A list longer than the heap can hold is a cycle.
    pub fn snapshot_free_lists(&self) -> Result<FreeListSnapshot> {
        let mut lists = Vec::with_capacity(self.num_freelists);
        for i in 0..self.num_freelists {
            let size = FreeListSnapshot::block_size(i);
            let limit = (self.heap_end - self.hp) / size;
            let mut list = Vec::new();
            let mut cur = self.words[self.flp + i];
            while cur != 0 {
                if list.len() >= limit {
                    return Err(HeapError::CorruptFree {
                        addr: cur,
                        reason: format!("cycle in free list 2^{}", i + 1),
                    });
                }
                let a = self.index(cur)?;
                if a < self.hp || a + size > self.heap_end {
                    return Err(HeapError::CorruptFree {
                        addr: cur,
                        reason: "free block outside the heap".into(),
                    });
                }
                list.push(a);
                cur = self.words[a];
            }
            lists.push(list);
        }
        Ok(FreeListSnapshot { lists })
    }

    /// One line per size class: `2^k: a -> b -> 0`.
    pub fn dump_free_lists(&self) -> String {
        let mut out = String::new();
        match self.snapshot_free_lists() {
            Ok(snap) => {
                for (i, list) in snap.lists.iter().enumerate() {
                    let _ = write!(out, "2^{}: ", i + 1);
                    for a in list {
                        let _ = write!(out, "{a} -> ");
                    }
                    out.push_str("0\n");
                }
            }
            Err(e) => {
                let _ = writeln!(out, "{e}");
            }
        }
        out
    }

    /// Hex dump of the whole arena, eight words per row.
    pub fn hex_dump(&self) -> String {
        let digits = (self.width.bits() / 4) as usize;
        let mask = if self.width == WordWidth::W64 {
            u64::MAX
        } else {
            (1u64 << self.width.bits()) - 1
        };
        let mut out = String::new();
        for (row, chunk) in self.words.chunks(8).enumerate() {
            let _ = write!(out, "{:06}:", row * 8);
            for w in chunk {
                let _ = write!(out, " {:0digits$x}", (*w as u64) & mask);
            }
            out.push('\n');
        }
        out
    }

    const MAGIC: &'static [u8; 4] = b"RPLS";
    const VERSION: u16 = 1;

    /// Serializes the image: magic, version, word bits, free-list count,
    /// growth flag, heap end, frame top, word count, then the words in
    /// little-endian order at the configured width.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(Self::MAGIC);
        out.extend_from_slice(&Self::VERSION.to_le_bytes());
        out.push(self.width.bits() as u8);
        out.push(self.num_freelists as u8);
        out.push(self.grow as u8);
        out.extend_from_slice(&(self.heap_end as u64).to_le_bytes());
        out.extend_from_slice(&(self.frame_top as u64).to_le_bytes());
        out.extend_from_slice(&(self.words.len() as u64).to_le_bytes());
        let nbytes = (self.width.bits() / 8) as usize;
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes()[..nbytes]);
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| HeapError::Config(format!("state file: {m}"));
        let header = 4 + 2 + 3 + 24;
        if bytes.len() < header || &bytes[..4] != Self::MAGIC {
            return Err(bad("bad magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != Self::VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let width = WordWidth::from_bits(bytes[6] as u32).ok_or_else(|| bad("bad word width"))?;
        let num_freelists = bytes[7] as usize;
        let grow = bytes[8] != 0;
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap()) as usize;
        let heap_end = u64_at(9);
        let frame_top = u64_at(17);
        let len = u64_at(25);
        let nbytes = (width.bits() / 8) as usize;
        if bytes.len() != header + len * nbytes {
            return Err(bad("truncated word array"));
        }
        let flp = 1;
        let hp = flp + num_freelists;
        if num_freelists < 2 || heap_end > frame_top || frame_top > len || hp > heap_end {
            return Err(bad("inconsistent layout"));
        }
        let words = bytes[header..]
            .chunks(nbytes)
            .map(|c| {
                let mut buf = [0u8; 8];
                buf[..nbytes].copy_from_slice(c);
                width.wrap(i64::from_le_bytes(buf))
            })
            .collect();
        Ok(MemoryImage {
            words,
            width,
            num_freelists,
            flp,
            hp,
            heap_end,
            frame_top,
            grow,
        })
    }
}
