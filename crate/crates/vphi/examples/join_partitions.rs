//! The join operation on its own: build the two partitions flowing out of
//! a diamond's branches by hand, join them, and inspect the result.
//!
//! The running example: both branches bind x3/y3/z3 (the phi targets).
//! On the left, y's class additionally computes "x plus one"; on the
//! right, z's class does. Neither expression survives the join, because
//! an expression only stays when it is computed on *both* sides — but
//! every phi target gets a fresh class annotated with a value
//! phi-function remembering which value it has on each side.
//!
//! Run with: cargo run --example join_partitions

use vphi::analysis::join;
use vphi::partition::{AllocationKey, Allocator, Class, Partition, ValueExpression};

fn main() {
    let mut alloc = Allocator::new();
    let mut input = |name: &str| alloc.number(AllocationKey::Input(name.to_string()));
    let x1 = input("x1");
    let y1 = input("y1");
    let z1 = input("z1");
    let x2 = input("x2");
    let y2 = input("y2");
    let z2 = input("z2");
    let one = alloc.number(AllocationKey::Const(1));

    let left = Partition::from_classes(vec![
        Class::new(x1).with_var("x1").with_var("x3"),
        Class::new(y1).with_var("y1").with_var("y3").with_expr(ValueExpression::new('+', x1, one)),
        Class::new(z1).with_var("z1").with_var("z3"),
    ]);
    let right = Partition::from_classes(vec![
        Class::new(x2).with_var("x2").with_var("x3"),
        Class::new(y2).with_var("y2").with_var("y3"),
        Class::new(z2).with_var("z2").with_var("z3").with_expr(ValueExpression::new('+', x2, one)),
    ]);

    println!("left:   {}", left.render_text());
    println!("right:  {}", right.render_text());

    let joined = join(&left, &right, "B", &mut alloc);
    println!("joined: {}", joined.render_text());

    // Every class pair is intersected member-wise; only non-empty
    // intersections survive. Here that leaves exactly the phi targets.
    assert_eq!(joined.classes().len(), 3);
    for var in ["x3", "y3", "z3"] {
        let class = joined.class_of_var(var).unwrap();
        let vpf = class.vpf.as_ref().expect("annotated with a value phi-function");
        println!("  {var}: value {} = {vpf}", class.vn);
    }

    // Joining a partition with itself changes nothing.
    let self_join = join(&joined, &joined, "B", &mut alloc);
    assert_eq!(self_join, joined, "join is idempotent");
    println!("join is idempotent: rejoining reproduces the partition exactly");
}
