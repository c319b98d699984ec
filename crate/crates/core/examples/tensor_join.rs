//! Tensor-path join: key axes, alignment and the gathered product.

use tensorlab::{key_axis_align, nested_loop_join_oracle, tensor_join, to_tensor, GenSpec, Result};

fn main() -> Result<()> {
    let left = tensorlab::generate_relation(&GenSpec::uniform(12, 6, 4, 1))?;
    let right = tensorlab::generate_relation(&GenSpec::uniform(8, 6, 4, 2))?;
    let (lt, rt) = (to_tensor(&left, "key")?, to_tensor(&right, "key")?);
    println!("left key axis:  {:?}", lt.distinct_keys());
    println!("right key axis: {:?}", rt.distinct_keys());
    let axis = key_axis_align(&lt, &rt);
    for i in 0..axis.len() {
        let key = axis.matched_keys[i];
        let (lg, rg) = (lt.group(axis.left_groups[i] as usize), rt.group(axis.right_groups[i] as usize));
        println!("key {key}: left rows {lg:?} x right rows {rg:?}");
    }
    let out = tensor_join(&lt, &rt)?;
    assert_eq!(out.relation, nested_loop_join_oracle(&left, &right, "key")?);
    assert!(out.spill.is_zero());
    println!("{} output rows, identical to the nested-loop join", out.relation.row_count());

    // At scale the index build and gather stay linear.
    for n in [100_000, 1_000_000] {
        let l = tensorlab::generate_relation(&GenSpec::calibration(n, 1))?;
        let r = tensorlab::generate_relation(&GenSpec::calibration(n, 2))?;
        let t = std::time::Instant::now();
        let out = tensor_join(&to_tensor(&l, "key")?, &to_tensor(&r, "key")?)?;
        let secs = t.elapsed().as_secs_f64();
        println!("n={n}: {:.1} ns/row, peak {} MB", secs * 1e9 / n as f64, out.peak_mem_bytes >> 20);
    }
    Ok(())
}
