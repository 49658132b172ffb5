//! Euler-tour trees over a directed forest.
//!
//! Node `v` owns two tour tokens, an open `2v` and a close `2v + 1`. A tree's
//! tour is the parenthesis sequence of a depth-first walk, so a tree of `k`
//! nodes has a tour of length `2k`, the opens appear in preorder, and `a` is
//! an ancestor of `b` exactly when `open(b)` lies strictly inside the
//! interval `[open(a), close(a)]`. Tours are kept in splay trees keyed by
//! position, with subtree size and open-token counts as aggregates. Children
//! are ordered by join time; a join appends the new child last.

use thiserror::Error;

use crate::clock::StepCounter;
use crate::gcds::canonical_hash;
use crate::heap::NodeId;
use crate::journal::{JCell, JVec, Journaled};

const NIL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EttError {
    #[error("node has no parent")]
    NoParent,
    #[error("join target is not a tree root")]
    NotRoot,
    #[error("both nodes are in the same tree")]
    SameTree,
    #[error("edge is not a forest edge")]
    NotParent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Tok {
    left: u32,
    right: u32,
    up: u32,
    size: u32,
    opens: u32,
}

const DEAD: Tok = Tok {
    left: NIL,
    right: NIL,
    up: NIL,
    size: 0,
    opens: 0,
};

#[inline]
fn open(v: NodeId) -> u32 {
    v.0 * 2
}

#[inline]
fn close(v: NodeId) -> u32 {
    v.0 * 2 + 1
}

#[inline]
fn is_open(t: u32) -> bool {
    t.is_multiple_of(2)
}

#[inline]
fn owner(t: u32) -> NodeId {
    NodeId(t / 2)
}

#[derive(Debug, Clone, Default)]
pub struct EttForest {
    toks: JVec<Tok>,
    parent: JVec<Option<NodeId>>,
    live: JVec<bool>,
    live_count: JCell<usize>,
}

impl EttForest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Live nodes.
    pub fn len(&self) -> usize {
        *self.live_count.get()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Ids ever handed out, live or not.
    pub fn capacity(&self) -> usize {
        self.parent.len()
    }

    pub fn is_live(&self, v: NodeId) -> bool {
        self.live.as_slice().get(v.index()).copied().unwrap_or(false)
    }

    #[inline]
    fn tok(&self, t: u32) -> Tok {
        *self.toks.get(t as usize)
    }

    #[inline]
    fn sz(&self, t: u32) -> u32 {
        if t == NIL {
            0
        } else {
            self.tok(t).size
        }
    }

    #[inline]
    fn ops(&self, t: u32) -> u32 {
        if t == NIL {
            0
        } else {
            self.tok(t).opens
        }
    }

    fn pull(&mut self, x: u32) {
        let n = self.tok(x);
        let size = 1 + self.sz(n.left) + self.sz(n.right);
        let opens = is_open(x) as u32 + self.ops(n.left) + self.ops(n.right);
        let m = self.toks.get_mut(x as usize);
        m.size = size;
        m.opens = opens;
    }

    fn set_up(&mut self, x: u32, up: u32) {
        if x != NIL {
            self.toks.get_mut(x as usize).up = up;
        }
    }

    fn rotate(&mut self, x: u32) {
        let p = self.tok(x).up;
        let g = self.tok(p).up;
        if self.tok(p).left == x {
            let b = self.tok(x).right;
            self.toks.get_mut(p as usize).left = b;
            self.set_up(b, p);
            self.toks.get_mut(x as usize).right = p;
        } else {
            let b = self.tok(x).left;
            self.toks.get_mut(p as usize).right = b;
            self.set_up(b, p);
            self.toks.get_mut(x as usize).left = p;
        }
        self.set_up(p, x);
        self.set_up(x, g);
        if g != NIL {
            let gm = self.toks.get_mut(g as usize);
            if gm.left == p {
                gm.left = x;
            } else {
                gm.right = x;
            }
        }
        self.pull(p);
        self.pull(x);
    }

    fn splay(&mut self, x: u32, clk: &mut StepCounter) {
        loop {
            let p = self.tok(x).up;
            if p == NIL {
                break;
            }
            let g = self.tok(p).up;
            if g != NIL {
                let zigzig = (self.tok(g).left == p) == (self.tok(p).left == x);
                self.rotate(if zigzig { p } else { x });
                clk.tick(1);
            }
            self.rotate(x);
            clk.tick(1);
        }
    }

    /// Splay root of the tour containing `t`, without restructuring.
    fn top(&self, mut t: u32, clk: &mut StepCounter) -> u32 {
        loop {
            let up = self.tok(t).up;
            if up == NIL {
                return t;
            }
            clk.tick(1);
            t = up;
        }
    }

    fn concat(&mut self, a: u32, b: u32, clk: &mut StepCounter) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        let mut x = a;
        while self.tok(x).right != NIL {
            x = self.tok(x).right;
            clk.tick(1);
        }
        self.splay(x, clk);
        self.toks.get_mut(x as usize).right = b;
        self.set_up(b, x);
        self.pull(x);
        x
    }

    /// Detach everything before `x`; returns that prefix.
    fn split_before(&mut self, x: u32, clk: &mut StepCounter) -> u32 {
        self.splay(x, clk);
        let l = self.tok(x).left;
        if l != NIL {
            self.set_up(l, NIL);
            self.toks.get_mut(x as usize).left = NIL;
            self.pull(x);
        }
        l
    }

    /// Detach everything after `x`; returns that suffix.
    fn split_after(&mut self, x: u32, clk: &mut StepCounter) -> u32 {
        self.splay(x, clk);
        let r = self.tok(x).right;
        if r != NIL {
            self.set_up(r, NIL);
            self.toks.get_mut(x as usize).right = NIL;
            self.pull(x);
        }
        r
    }

    fn rank(&mut self, t: u32, clk: &mut StepCounter) -> u32 {
        self.splay(t, clk);
        self.sz(self.tok(t).left)
    }

    /// New one-node tree. Ids are handed out densely from zero.
    pub fn singleton(&mut self, clk: &mut StepCounter) -> NodeId {
        let v = NodeId(self.parent.len() as u32);
        self.toks.push(Tok {
            left: NIL,
            right: close(v),
            up: NIL,
            size: 2,
            opens: 1,
        });
        self.toks.push(Tok {
            left: NIL,
            right: NIL,
            up: open(v),
            size: 1,
            opens: 0,
        });
        self.parent.push(None);
        self.live.push(true);
        self.live_count.set(self.len() + 1);
        clk.tick(2);
        v
    }

    #[inline]
    pub fn parent(&self, v: NodeId, clk: &mut StepCounter) -> Option<NodeId> {
        clk.tick(1);
        *self.parent.get(v.index())
    }

    /// Uncharged parent lookup.
    pub fn parent_of(&self, v: NodeId) -> Option<NodeId> {
        *self.parent.get(v.index())
    }

    pub fn same_tree(&mut self, x: NodeId, y: NodeId, clk: &mut StepCounter) -> bool {
        if x == y {
            return true;
        }
        self.splay(open(x), clk);
        let same = self.top(open(y), clk) == open(x);
        self.splay(open(y), clk);
        same
    }

    /// Root of the tree containing `v`.
    pub fn find_root(&mut self, v: NodeId, clk: &mut StepCounter) -> NodeId {
        self.splay(open(v), clk);
        let mut x = open(v);
        while self.tok(x).left != NIL {
            x = self.tok(x).left;
            clk.tick(1);
        }
        self.splay(x, clk);
        owner(x)
    }

    /// Whether `a` is an ancestor of `b`, inclusively.
    pub fn path(&mut self, a: NodeId, b: NodeId, clk: &mut StepCounter) -> bool {
        if a == b {
            return true;
        }
        if !self.same_tree(a, b, clk) {
            return false;
        }
        let rb = self.rank(open(b), clk);
        let ra = self.rank(open(a), clk);
        if rb < ra {
            return false;
        }
        rb < self.rank(close(a), clk)
    }

    /// Make the tree rooted at `b` the last child subtree of `a`.
    pub fn join(&mut self, a: NodeId, b: NodeId, clk: &mut StepCounter) -> Result<(), EttError> {
        if self.parent(b, clk).is_some() {
            return Err(EttError::NotRoot);
        }
        if self.same_tree(a, b, clk) {
            return Err(EttError::SameTree);
        }
        self.splay(open(b), clk);
        let sub = open(b);
        let prefix = self.split_before(close(a), clk);
        let mid = self.concat(prefix, sub, clk);
        let ca = close(a);
        self.toks.get_mut(ca as usize).left = mid;
        self.set_up(mid, ca);
        self.pull(ca);
        self.parent.set(b.index(), Some(a));
        clk.tick(1);
        Ok(())
    }

    /// Detach `v` and its subtree from its parent.
    pub fn cut(&mut self, v: NodeId, clk: &mut StepCounter) -> Result<(), EttError> {
        if self.parent(v, clk).is_none() {
            return Err(EttError::NoParent);
        }
        let prefix = self.split_before(open(v), clk);
        let suffix = self.split_after(close(v), clk);
        self.concat(prefix, suffix, clk);
        self.parent.set(v.index(), None);
        clk.tick(1);
        Ok(())
    }

    /// Cut the forest edge `a -> b`.
    pub fn cut_edge(&mut self, a: NodeId, b: NodeId, clk: &mut StepCounter) -> Result<(), EttError> {
        if self.parent(b, clk) != Some(a) {
            return Err(EttError::NotParent);
        }
        self.cut(b, clk)
    }

    /// Successor of `a` in the preorder of its tree.
    pub fn next(&mut self, a: NodeId, clk: &mut StepCounter) -> Option<NodeId> {
        self.splay(open(a), clk);
        let mut x = self.tok(open(a)).right;
        if self.ops(x) == 0 {
            return None;
        }
        loop {
            clk.tick(1);
            let l = self.tok(x).left;
            if self.ops(l) > 0 {
                x = l;
            } else if is_open(x) {
                break;
            } else {
                x = self.tok(x).right;
            }
        }
        self.splay(x, clk);
        Some(owner(x))
    }

    /// Remove the whole tree containing `v`; returns its nodes in preorder.
    pub fn erase_tree(&mut self, v: NodeId, clk: &mut StepCounter) -> Vec<NodeId> {
        self.splay(open(v), clk);
        let tour = self.inorder(open(v), clk);
        let mut nodes = Vec::with_capacity(tour.len() / 2);
        for t in tour {
            self.toks.set(t as usize, DEAD);
            if is_open(t) {
                let u = owner(t);
                self.parent.set(u.index(), None);
                self.live.set(u.index(), false);
                nodes.push(u);
            }
        }
        self.live_count.set(self.len() - nodes.len());
        nodes
    }

    fn inorder(&self, root: u32, clk: &mut StepCounter) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.sz(root) as usize);
        let mut stack = Vec::new();
        let mut x = root;
        while x != NIL || !stack.is_empty() {
            while x != NIL {
                stack.push(x);
                x = self.tok(x).left;
            }
            let t = stack.pop().unwrap();
            clk.tick(1);
            out.push(t);
            x = self.tok(t).right;
        }
        out
    }

    /// Token sequence of the tour containing `v`; `(node, is_open)` pairs.
    pub fn tour(&self, v: NodeId) -> Vec<(NodeId, bool)> {
        let mut clk = StepCounter::new();
        let top = self.top(open(v), &mut clk);
        self.inorder(top, &mut clk)
            .into_iter()
            .map(|t| (owner(t), is_open(t)))
            .collect()
    }

    /// Nodes of `v`'s tree in preorder.
    pub fn preorder(&self, v: NodeId) -> Vec<NodeId> {
        self.tour(v)
            .into_iter()
            .filter_map(|(u, o)| o.then_some(u))
            .collect()
    }

    /// Live tree roots, ascending.
    pub fn roots(&self) -> Vec<NodeId> {
        (0..self.capacity() as u32)
            .map(NodeId)
            .filter(|&v| self.is_live(v) && self.parent_of(v).is_none())
            .collect()
    }

    /// Canonical hash of the forest: every tree's tour, ordered by root.
    pub fn state_hash(&self) -> u64 {
        let tours: Vec<_> = self.roots().into_iter().map(|r| self.tour(r)).collect();
        canonical_hash(&tours)
    }

    /// Structural self-check: tours are balanced, agree with the parent
    /// map and have length twice the tree size, and splay aggregates and
    /// back-pointers are consistent.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = 0usize;
        for r in self.roots() {
            let tour = self.tour(r);
            if tour.first() != Some(&(r, true)) || tour.last() != Some(&(r, false)) {
                return Err(format!("tour of {r} is not bracketed by {r}"));
            }
            let mut stack: Vec<NodeId> = Vec::new();
            let mut opens = 0;
            for &(u, o) in &tour {
                if !self.is_live(u) {
                    return Err(format!("dead node {u} in tour of {r}"));
                }
                if o {
                    if self.parent_of(u) != stack.last().copied() {
                        return Err(format!("parent of {u} disagrees with tour"));
                    }
                    stack.push(u);
                    opens += 1;
                } else if stack.pop() != Some(u) {
                    return Err(format!("unbalanced close of {u}"));
                }
            }
            if !stack.is_empty() || tour.len() != 2 * opens {
                return Err(format!("tour of {r} has bad length"));
            }
            seen += opens;
            let mut clk = StepCounter::new();
            let top = self.top(open(r), &mut clk);
            if self.tok(top).up != NIL {
                return Err("splay root has a parent".into());
            }
            self.check_aggregates(top)?;
        }
        if seen != self.len() {
            return Err(format!("{} live nodes but {seen} in tours", self.len()));
        }
        Ok(())
    }

    fn check_aggregates(&self, x: u32) -> Result<(u32, u32), String> {
        if x == NIL {
            return Ok((0, 0));
        }
        let n = self.tok(x);
        for c in [n.left, n.right] {
            if c != NIL && self.tok(c).up != x {
                return Err(format!("token {c} has stale back-pointer"));
            }
        }
        let (ls, lo) = self.check_aggregates(n.left)?;
        let (rs, ro) = self.check_aggregates(n.right)?;
        let want = (1 + ls + rs, is_open(x) as u32 + lo + ro);
        if (n.size, n.opens) != want {
            return Err(format!("token {x} has stale aggregates"));
        }
        Ok(want)
    }
}

impl Journaled for EttForest {
    fn begin(&mut self) {
        self.toks.begin();
        self.parent.begin();
        self.live.begin();
        self.live_count.begin();
    }

    fn rollback(&mut self) {
        self.toks.rollback();
        self.parent.rollback();
        self.live.rollback();
        self.live_count.rollback();
    }

    fn commit(&mut self) {
        self.toks.commit();
        self.parent.commit();
        self.live.commit();
        self.live_count.commit();
    }
}

/// Plain parent-pointer forest with ordered children, used as an oracle.
#[derive(Debug, Clone, Default)]
pub struct NaiveForest {
    parent: Vec<Option<NodeId>>,
    children: Vec<Vec<NodeId>>,
}

impl NaiveForest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(&mut self) -> NodeId {
        self.parent.push(None);
        self.children.push(Vec::new());
        NodeId(self.parent.len() as u32 - 1)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn parent(&self, v: NodeId) -> Option<NodeId> {
        self.parent[v.index()]
    }

    pub fn root(&self, mut v: NodeId) -> NodeId {
        while let Some(p) = self.parent(v) {
            v = p;
        }
        v
    }

    pub fn path(&self, a: NodeId, b: NodeId) -> bool {
        let mut x = Some(b);
        while let Some(v) = x {
            if v == a {
                return true;
            }
            x = self.parent(v);
        }
        false
    }

    pub fn join(&mut self, a: NodeId, b: NodeId) -> Result<(), EttError> {
        if self.parent(b).is_some() {
            return Err(EttError::NotRoot);
        }
        if self.root(a) == b {
            return Err(EttError::SameTree);
        }
        self.parent[b.index()] = Some(a);
        self.children[a.index()].push(b);
        Ok(())
    }

    pub fn cut(&mut self, v: NodeId) -> Result<(), EttError> {
        let p = self.parent(v).ok_or(EttError::NoParent)?;
        self.children[p.index()].retain(|&c| c != v);
        self.parent[v.index()] = None;
        Ok(())
    }

    pub fn preorder(&self, v: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root(v)];
        while let Some(x) = stack.pop() {
            out.push(x);
            stack.extend(self.children[x.index()].iter().rev());
        }
        out
    }

    pub fn next(&self, v: NodeId) -> Option<NodeId> {
        let order = self.preorder(v);
        let i = order.iter().position(|&x| x == v).unwrap();
        order.get(i + 1).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(v: u32) -> NodeId {
        NodeId(v)
    }

    fn forest(k: usize) -> (EttForest, StepCounter) {
        let mut c = StepCounter::new();
        let mut f = EttForest::new();
        for _ in 0..k {
            f.singleton(&mut c);
        }
        (f, c)
    }

    #[test]
    fn singleton_basics() {
        let (mut f, mut c) = forest(2);
        assert_eq!(f.next(n(0), &mut c), None);
        assert!(!f.path(n(0), n(1), &mut c));
        assert!(f.path(n(1), n(1), &mut c));
        f.join(n(0), n(1), &mut c).unwrap();
        assert_eq!(f.parent_of(n(1)), Some(n(0)));
        assert!(f.path(n(0), n(1), &mut c));
        assert!(!f.path(n(1), n(0), &mut c));
        f.check_invariants().unwrap();
    }

    #[test]
    fn cut_splits_chain() {
        // r=0 -> a=1 -> b=2
        let (mut f, mut c) = forest(3);
        f.join(n(1), n(2), &mut c).unwrap();
        f.join(n(0), n(1), &mut c).unwrap();
        f.cut(n(1), &mut c).unwrap();
        assert_eq!(f.preorder(n(0)), vec![n(0)]);
        assert_eq!(f.preorder(n(2)), vec![n(1), n(2)]);
        assert_eq!(f.cut(n(1), &mut c), Err(EttError::NoParent));
        f.check_invariants().unwrap();
    }

    #[test]
    fn preorder_navigation() {
        // r=0 -> {a=1 -> {c=3}, b=2}
        let (mut f, mut c) = forest(4);
        f.join(n(0), n(1), &mut c).unwrap();
        f.join(n(0), n(2), &mut c).unwrap();
        f.join(n(1), n(3), &mut c).unwrap();
        assert_eq!(f.next(n(0), &mut c), Some(n(1)));
        assert_eq!(f.next(n(1), &mut c), Some(n(3)));
        assert_eq!(f.next(n(3), &mut c), Some(n(2)));
        assert_eq!(f.next(n(2), &mut c), None);
        assert!(!f.path(n(1), n(2), &mut c));
    }

    #[test]
    fn join_preconditions() {
        let (mut f, mut c) = forest(3);
        f.join(n(0), n(1), &mut c).unwrap();
        assert_eq!(f.join(n(2), n(1), &mut c), Err(EttError::NotRoot));
        assert_eq!(f.join(n(1), n(0), &mut c), Err(EttError::SameTree));
        assert_eq!(f.cut_edge(n(2), n(1), &mut c), Err(EttError::NotParent));
    }

    #[test]
    fn separated_tree_preorder() {
        // b=1 with children n1=2, n2=3 (-> n4=5), n3=4
        let (mut f, mut c) = forest(6);
        f.join(n(1), n(2), &mut c).unwrap();
        f.join(n(1), n(3), &mut c).unwrap();
        f.join(n(1), n(4), &mut c).unwrap();
        f.join(n(3), n(5), &mut c).unwrap();
        assert_eq!(f.preorder(n(1)), vec![n(1), n(2), n(3), n(5), n(4)]);
        // move {n2, n4} under n3
        f.cut(n(3), &mut c).unwrap();
        f.join(n(4), n(3), &mut c).unwrap();
        assert!(f.path(n(4), n(5), &mut c));
        assert_eq!(f.preorder(n(1)), vec![n(1), n(2), n(4), n(3), n(5)]);
        f.check_invariants().unwrap();
    }

    #[test]
    fn cut_then_rejoin_restores_parents() {
        let (mut f, mut c) = forest(5);
        for v in 1..5 {
            f.join(n(v - 1), n(v), &mut c).unwrap();
        }
        let before = f.state_hash();
        f.cut(n(4), &mut c).unwrap();
        f.join(n(3), n(4), &mut c).unwrap();
        assert_eq!(f.state_hash(), before);
    }

    #[test]
    fn erase_removes_whole_tree() {
        let (mut f, mut c) = forest(4);
        f.join(n(1), n(2), &mut c).unwrap();
        f.join(n(1), n(3), &mut c).unwrap();
        assert_eq!(f.erase_tree(n(3), &mut c), vec![n(1), n(2), n(3)]);
        assert_eq!(f.len(), 1);
        assert!(!f.is_live(n(2)));
        f.check_invariants().unwrap();
    }

    #[test]
    fn rollback_restores_forest() {
        let (mut f, mut c) = forest(4);
        f.join(n(0), n(1), &mut c).unwrap();
        let h = f.state_hash();
        f.begin();
        f.join(n(1), n(2), &mut c).unwrap();
        f.cut(n(1), &mut c).unwrap();
        f.singleton(&mut c);
        f.erase_tree(n(3), &mut c);
        f.rollback();
        assert_eq!(f.state_hash(), h);
        assert_eq!(f.capacity(), 4);
        f.check_invariants().unwrap();
    }

    #[derive(Debug, Clone)]
    enum FOp {
        Join(u32, u32),
        Cut(u32),
        Path(u32, u32),
        Next(u32),
    }

    fn fop(k: u32) -> impl Strategy<Value = FOp> {
        prop_oneof![
            (0..k, 0..k).prop_map(|(a, b)| FOp::Join(a, b)),
            (0..k).prop_map(FOp::Cut),
            (0..k, 0..k).prop_map(|(a, b)| FOp::Path(a, b)),
            (0..k).prop_map(FOp::Next),
        ]
    }

    proptest! {
        #[test]
        fn agrees_with_naive_forest(ops in prop::collection::vec(fop(20), 1..300)) {
            let (mut f, mut c) = forest(20);
            let mut o = NaiveForest::new();
            for _ in 0..20 {
                o.singleton();
            }
            for op in ops {
                match op {
                    FOp::Join(a, b) => prop_assert_eq!(f.join(n(a), n(b), &mut c), o.join(n(a), n(b))),
                    FOp::Cut(v) => prop_assert_eq!(f.cut(n(v), &mut c), o.cut(n(v))),
                    FOp::Path(a, b) => prop_assert_eq!(f.path(n(a), n(b), &mut c), o.path(n(a), n(b))),
                    FOp::Next(v) => prop_assert_eq!(f.next(n(v), &mut c), o.next(n(v))),
                }
                prop_assert!(f.check_invariants().is_ok());
            }
            for v in 0..20 {
                prop_assert_eq!(f.parent_of(n(v)), o.parent(n(v)));
            }
        }
    }
}
