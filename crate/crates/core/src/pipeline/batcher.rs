use super::queue::{Received, StageQueue};
use crate::error::{Error, Result};

/// Groups a queue's items into batches of `batch_size`, preserving order.
///
/// A trailing partial batch is emitted at end of stream when
/// `flush_on_sentinel` is set and dropped otherwise.
pub struct Batcher<'q, T> {
    queue: &'q StageQueue<T>,
    batch_size: usize,
    flush_on_sentinel: bool,
    done: bool,
}

pub fn batcher<T>(
    queue: &StageQueue<T>,
    batch_size: usize,
    flush_on_sentinel: bool,
) -> Result<Batcher<'_, T>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    Ok(Batcher {
        queue,
        batch_size,
        flush_on_sentinel,
        done: false,
    })
}

impl<T> Iterator for Batcher<'_, T> {
    type Item = Result<Vec<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut batch = Vec::with_capacity(self.batch_size);
        loop {
            match self.queue.recv() {
                Ok(Received::Item(item)) => {
                    batch.push(item);
                    if batch.len() == self.batch_size {
                        return Some(Ok(batch));
                    }
                }
                Ok(Received::End) => {
                    self.done = true;
                    return (self.flush_on_sentinel && !batch.is_empty()).then_some(Ok(batch));
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
    }
}
