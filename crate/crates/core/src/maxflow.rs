//! Integer max-flow / min-cut with two search trees that survive between
//! augmentations (growth, augmentation, adoption).
//!
//! Nodes carry a single signed terminal capacity: positive means residual
//! capacity from the source, negative means residual capacity to the sink.

use std::collections::VecDeque;

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;
const INFINITE_DIST: u32 = u32::MAX;

#[derive(Debug, Clone)]
struct Node {
    first: u32,
    /// Arc from this node to its tree parent, or one of the sentinels.
    parent: u32,
    in_sink_tree: bool,
    active: bool,
    ts: u32,
    dist: u32,
    tr_cap: i64,
}

#[derive(Debug, Clone)]
struct Arc {
    head: u32,
    next: u32,
    r_cap: i64,
}

#[derive(Debug, Clone)]
pub struct Graph {
    nodes: Vec<Node>,
    arcs: Vec<Arc>,
    flow: i64,
    time: u32,
    active: VecDeque<u32>,
    orphans: VecDeque<u32>,
    solved: bool,
}

/// Which side of the minimum cut a node ended on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Sink,
}

impl Graph {
    pub fn new(nodes: usize) -> Self {
        Self::with_capacity(nodes, 0)
    }

    pub fn with_capacity(nodes: usize, edges: usize) -> Self {
        Self {
            nodes: vec![
                Node {
                    first: NONE,
                    parent: NONE,
                    in_sink_tree: false,
                    active: false,
                    ts: 0,
                    dist: 0,
                    tr_cap: 0,
                };
                nodes
            ],
            arcs: Vec::with_capacity(2 * edges),
            flow: 0,
            time: 0,
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            solved: false,
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Terminal capacities `source -> i` and `i -> sink`. Repeated calls add up.
    pub fn add_terminal(&mut self, i: usize, source_cap: i64, sink_cap: i64) {
        debug_assert!(source_cap >= 0 && sink_cap >= 0);
        let common = source_cap.min(sink_cap);
        self.flow += common;
        self.nodes[i].tr_cap += source_cap - sink_cap;
    }

    /// Edge `i -> j` with capacity `cap` and reverse capacity `rev_cap`.
    pub fn add_edge(&mut self, i: usize, j: usize, cap: i64, rev_cap: i64) {
        debug_assert!(i != j && cap >= 0 && rev_cap >= 0);
        let a = self.arcs.len() as u32;
        self.arcs.push(Arc {
            head: j as u32,
            next: self.nodes[i].first,
            r_cap: cap,
        });
        self.nodes[i].first = a;
        self.arcs.push(Arc {
            head: i as u32,
            next: self.nodes[j].first,
            r_cap: rev_cap,
        });
        self.nodes[j].first = a + 1;
    }

    #[inline]
    fn sister(a: u32) -> u32 {
        a ^ 1
    }

    #[inline]
    fn tail(&self, a: u32) -> u32 {
        self.arcs[Self::sister(a) as usize].head
    }

    fn set_active(&mut self, i: u32) {
        let n = &mut self.nodes[i as usize];
        if !n.active {
            n.active = true;
            self.active.push_back(i);
        }
    }

    fn next_active(&mut self) -> Option<u32> {
        while let Some(i) = self.active.pop_front() {
            self.nodes[i as usize].active = false;
            if self.nodes[i as usize].parent != NONE {
                return Some(i);
            }
        }
        None
    }

    fn make_orphan_front(&mut self, i: u32) {
        self.nodes[i as usize].parent = ORPHAN;
        self.orphans.push_front(i);
    }

    fn make_orphan_back(&mut self, i: u32) {
        self.nodes[i as usize].parent = ORPHAN;
        self.orphans.push_back(i);
    }

    /// Runs to completion and returns the max-flow value (including the
    /// flow implied by nodes connected to both terminals).
    pub fn maxflow(&mut self) -> i64 {
        if self.solved {
            return self.flow;
        }
        for i in 0..self.nodes.len() as u32 {
            let n = &mut self.nodes[i as usize];
            n.ts = 0;
            if n.tr_cap > 0 {
                n.in_sink_tree = false;
                n.parent = TERMINAL;
                n.dist = 1;
                self.set_active(i);
            } else if n.tr_cap < 0 {
                n.in_sink_tree = true;
                n.parent = TERMINAL;
                n.dist = 1;
                self.set_active(i);
            } else {
                n.parent = NONE;
            }
        }

        let mut current: Option<u32> = None;
        loop {
            let i = match current.take() {
                Some(i) if self.nodes[i as usize].parent != NONE => i,
                _ => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };

            let bridge = self.grow(i);
            self.time += 1;
            if let Some(a) = bridge {
                // keep i current: it may have more paths
                current = Some(i);
                self.augment(a);
                while let Some(o) = self.orphans.pop_front() {
                    if self.nodes[o as usize].in_sink_tree {
                        self.process_sink_orphan(o);
                    } else {
                        self.process_source_orphan(o);
                    }
                }
            }
        }
        self.solved = true;
        self.flow
    }

    /// Expands the tree of `i`; returns the arc (source side to sink side)
    /// joining both trees if one is found.
    fn grow(&mut self, i: u32) -> Option<u32> {
        let (i_sink, i_ts, i_dist) = {
            let n = &self.nodes[i as usize];
            (n.in_sink_tree, n.ts, n.dist)
        };
        let mut a = self.nodes[i as usize].first;
        while a != NONE {
            let cap = if i_sink {
                self.arcs[Self::sister(a) as usize].r_cap
            } else {
                self.arcs[a as usize].r_cap
            };
            if cap > 0 {
                let j = self.arcs[a as usize].head;
                let jn = &self.nodes[j as usize];
                if jn.parent == NONE {
                    let jn = &mut self.nodes[j as usize];
                    jn.in_sink_tree = i_sink;
                    jn.parent = Self::sister(a);
                    jn.ts = i_ts;
                    jn.dist = i_dist + 1;
                    self.set_active(j);
                } else if jn.in_sink_tree != i_sink {
                    return Some(if i_sink { Self::sister(a) } else { a });
                } else if jn.ts <= i_ts && jn.dist > i_dist {
                    // shorter path to the terminal through i
                    let jn = &mut self.nodes[j as usize];
                    jn.parent = Self::sister(a);
                    jn.ts = i_ts;
                    jn.dist = i_dist + 1;
                }
            }
            a = self.arcs[a as usize].next;
        }
        None
    }

    fn augment(&mut self, middle: u32) {
        let mut bottleneck = self.arcs[middle as usize].r_cap;

        let mut i = self.tail(middle);
        loop {
            let a = self.nodes[i as usize].parent;
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.arcs[Self::sister(a) as usize].r_cap);
            i = self.arcs[a as usize].head;
        }
        bottleneck = bottleneck.min(self.nodes[i as usize].tr_cap);

        let mut i = self.arcs[middle as usize].head;
        loop {
            let a = self.nodes[i as usize].parent;
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.arcs[a as usize].r_cap);
            i = self.arcs[a as usize].head;
        }
        bottleneck = bottleneck.min(-self.nodes[i as usize].tr_cap);

        self.arcs[middle as usize].r_cap -= bottleneck;
        self.arcs[Self::sister(middle) as usize].r_cap += bottleneck;

        let mut i = self.tail(middle);
        loop {
            let a = self.nodes[i as usize].parent;
            if a == TERMINAL {
                break;
            }
            self.arcs[a as usize].r_cap += bottleneck;
            self.arcs[Self::sister(a) as usize].r_cap -= bottleneck;
            let next = self.arcs[a as usize].head;
            if self.arcs[Self::sister(a) as usize].r_cap == 0 {
                self.make_orphan_front(i);
            }
            i = next;
        }
        self.nodes[i as usize].tr_cap -= bottleneck;
        if self.nodes[i as usize].tr_cap == 0 {
            self.make_orphan_front(i);
        }

        let mut i = self.arcs[middle as usize].head;
        loop {
            let a = self.nodes[i as usize].parent;
            if a == TERMINAL {
                break;
            }
            self.arcs[Self::sister(a) as usize].r_cap += bottleneck;
            self.arcs[a as usize].r_cap -= bottleneck;
            let next = self.arcs[a as usize].head;
            if self.arcs[a as usize].r_cap == 0 {
                self.make_orphan_front(i);
            }
            i = next;
        }
        self.nodes[i as usize].tr_cap += bottleneck;
        if self.nodes[i as usize].tr_cap == 0 {
            self.make_orphan_front(i);
        }

        self.flow += bottleneck;
    }

    /// Distance from `j` to the terminal along parent links, or `None` if the
    /// chain ends in an orphan. Marks visited nodes with the current time.
    fn origin_distance(&mut self, start: u32) -> Option<u32> {
        let mut j = start;
        let mut d: u32 = 0;
        loop {
            let n = &self.nodes[j as usize];
            if n.ts == self.time {
                d += n.dist;
                break;
            }
            let a = n.parent;
            d += 1;
            if a == TERMINAL {
                let n = &mut self.nodes[j as usize];
                n.ts = self.time;
                n.dist = 1;
                break;
            }
            if a == ORPHAN {
                return None;
            }
            j = self.arcs[a as usize].head;
        }
        // cache distances along the path
        let mut j = start;
        let mut dd = d;
        while self.nodes[j as usize].ts != self.time {
            let n = &mut self.nodes[j as usize];
            n.ts = self.time;
            n.dist = dd;
            dd -= 1;
            j = self.arcs[n.parent as usize].head;
        }
        Some(d)
    }

    fn process_source_orphan(&mut self, i: u32) {
        self.process_orphan(i, false);
    }

    fn process_sink_orphan(&mut self, i: u32) {
        self.process_orphan(i, true);
    }

    fn process_orphan(&mut self, i: u32, sink: bool) {
        let mut best: Option<(u32, u32)> = None;
        let mut a0 = self.nodes[i as usize].first;
        while a0 != NONE {
            // residual capacity in the direction flow travels toward i's terminal
            let cap = if sink {
                self.arcs[a0 as usize].r_cap
            } else {
                self.arcs[Self::sister(a0) as usize].r_cap
            };
            if cap > 0 {
                let j = self.arcs[a0 as usize].head;
                let jn = &self.nodes[j as usize];
                if jn.in_sink_tree == sink && jn.parent != NONE {
                    if let Some(d) = self.origin_distance(j) {
                        if d < INFINITE_DIST && best.is_none_or(|(_, bd)| d < bd) {
                            best = Some((a0, d));
                        }
                    }
                }
            }
            a0 = self.arcs[a0 as usize].next;
        }

        if let Some((a, d)) = best {
            let n = &mut self.nodes[i as usize];
            n.parent = a;
            n.ts = self.time;
            n.dist = d + 1;
            return;
        }

        self.nodes[i as usize].parent = NONE;
        let mut a0 = self.nodes[i as usize].first;
        while a0 != NONE {
            let j = self.arcs[a0 as usize].head;
            let (j_sink, j_parent) = {
                let jn = &self.nodes[j as usize];
                (jn.in_sink_tree, jn.parent)
            };
            if j_sink == sink && j_parent != NONE {
                let cap = if sink {
                    self.arcs[a0 as usize].r_cap
                } else {
                    self.arcs[Self::sister(a0) as usize].r_cap
                };
                if cap > 0 {
                    self.set_active(j);
                }
                if j_parent != TERMINAL && j_parent != ORPHAN && self.arcs[j_parent as usize].head == i {
                    self.make_orphan_back(j);
                }
            }
            a0 = self.arcs[a0 as usize].next;
        }
    }

    /// Side of node `i` in the minimum cut whose source side is as small as
    /// possible: exactly the nodes still reachable from the source in the
    /// residual graph. Must be called after [`Graph::maxflow`].
    pub fn min_cut_source_side(&self) -> Vec<Side> {
        assert!(self.solved, "maxflow() must run before reading the cut");
        let mut side = vec![Side::Sink; self.nodes.len()];
        let mut queue = VecDeque::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if n.tr_cap > 0 {
                side[i] = Side::Source;
                queue.push_back(i as u32);
            }
        }
        while let Some(i) = queue.pop_front() {
            let mut a = self.nodes[i as usize].first;
            while a != NONE {
                let arc = &self.arcs[a as usize];
                if arc.r_cap > 0 && side[arc.head as usize] == Side::Sink {
                    side[arc.head as usize] = Side::Source;
                    queue.push_back(arc.head);
                }
                a = arc.next;
            }
        }
        side
    }
}
