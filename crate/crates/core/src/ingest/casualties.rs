use crate::codebook::CodedCell;

use super::IngestError;

/// Spread a cumulative casualty figure over linked incidents, listed earliest
/// first. Each gets `total / n`; the first `total mod n` get one more.
pub fn distribute_casualties<T>(linked: &[T], total: CodedCell) -> Result<Vec<CodedCell>, IngestError> {
    let n = i64::try_from(linked.len()).map_err(|_| IngestError::EmptyLinkedList)?;
    if n == 0 {
        return Err(IngestError::EmptyLinkedList);
    }
    let Some(total) = total.known() else {
        return Ok(vec![CodedCell::Unknown; linked.len()]);
    };
    let (base, extra) = (total.div_euclid(n), total.rem_euclid(n));
    Ok((0..n).map(|i| CodedCell::Known(base + i64::from(i < extra))).collect())
}
