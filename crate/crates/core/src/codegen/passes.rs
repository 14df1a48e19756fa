//! Partial evaluation and supercompilation over the producer IR.
//!
//! Every rewrite keeps the sequence of `(bound, choice)` pairs a run
//! consumes: only single-alternative choices disappear, and those never
//! consumed anything.

use std::collections::HashSet;

use super::ir::{visit, visit_mut, ProducerIR, Step, Unit};

/// Units larger than this are not inlined by partial evaluation.
pub const INLINE_SIZE_LIMIT: usize = 64;

/// Driving stops growing a unit beyond this many steps.
pub const DRIVE_SIZE_LIMIT: usize = 4096;

fn body_size(body: &[Step]) -> usize {
    let mut n = 0;
    visit(body, &mut |_| n += 1);
    n
}

fn callees(body: &[Step]) -> Vec<usize> {
    let mut out = Vec::new();
    visit(body, &mut |s| {
        if let Step::Call { unit, .. } = s {
            out.push(*unit);
        }
    });
    out
}

/// Units that can reach themselves through calls.
pub fn recursive_units(ir: &ProducerIR) -> Vec<bool> {
    let edges: Vec<Vec<usize>> = ir.units.iter().map(|u| callees(&u.body)).collect();
    (0..ir.units.len())
        .map(|u| {
            let mut seen = vec![false; edges.len()];
            let mut stack = edges[u].clone();
            while let Some(v) = stack.pop() {
                if v == u {
                    return true;
                }
                if !std::mem::replace(&mut seen[v], true) {
                    stack.extend_from_slice(&edges[v]);
                }
            }
            false
        })
        .collect()
}

/// Moves a body into a context `delta` levels shallower.
fn shift(body: &mut [Step], delta: i32) {
    if delta == 0 {
        return;
    }
    visit_mut(body, &mut |s| match s {
        Step::Call { delta: d, .. } => *d += delta,
        Step::DepthCheck { offset, .. } => *offset += delta,
        _ => {}
    });
}

fn shifted(body: &[Step], delta: i32) -> Vec<Step> {
    let mut b = body.to_vec();
    shift(&mut b, delta);
    b
}

/// True if picking a path through the body needs no choice, looking through
/// depth checks but not into calls.
fn choice_free(body: &[Step]) -> bool {
    body.iter().all(|s| match s {
        Step::Choose(_) => false,
        Step::DepthCheck { under, over, .. } => choice_free(under) && choice_free(over),
        _ => true,
    })
}

/// What is known about the depth in the current context: checks with offset
/// at most `under` pass, checks with offset at least `over` fail.
#[derive(Clone, Copy, Default)]
struct Known {
    under: Option<i32>,
    over: Option<i32>,
}

fn simplify(body: Vec<Step>, known: Known, pools: &[super::ir::Pool]) -> Vec<Step> {
    let mut out: Vec<Step> = Vec::with_capacity(body.len());
    let push = |out: &mut Vec<Step>, step: Step| match (out.last_mut(), step) {
        (_, Step::Emit(b)) if b.is_empty() => {}
        (Some(Step::Emit(prev)), Step::Emit(b)) => prev.extend_from_slice(&b),
        (_, step) => out.push(step),
    };
    for step in body {
        match step {
            Step::PoolEmit(p) if pools[p].strings.len() == 1 => {
                push(&mut out, Step::Emit(pools[p].strings[0].clone()))
            }
            Step::Choose(arms) => {
                let arms = arms.into_iter().map(|a| simplify(a, known, pools)).collect();
                push(&mut out, Step::Choose(arms));
            }
            Step::DepthCheck { offset, under, over } => {
                let branch = if known.under.is_some_and(|u| offset <= u) {
                    Some(simplify(under, known, pools))
                } else if known.over.is_some_and(|o| offset >= o) {
                    Some(simplify(over, known, pools))
                } else {
                    let k_under = Known { under: Some(known.under.map_or(offset, |u| u.max(offset))), ..known };
                    let k_over = Known { over: Some(known.over.map_or(offset, |o| o.min(offset))), ..known };
                    let under = simplify(under, k_under, pools);
                    let over = simplify(over, k_over, pools);
                    if under == over {
                        Some(under)
                    } else {
                        push(&mut out, Step::DepthCheck { offset, under, over });
                        None
                    }
                };
                for s in branch.into_iter().flatten() {
                    push(&mut out, s);
                }
            }
            other => push(&mut out, other),
        }
    }
    out
}

/// Folds constants everywhere. The entry runs at depth 0 and the budget is at
/// least 1, so its checks with non-positive offsets always pass.
fn simplify_all(ir: &mut ProducerIR) {
    let entry = std::mem::take(&mut ir.entry);
    ir.entry = simplify(entry, Known { under: Some(0), over: None }, &ir.pools);
    for i in 0..ir.units.len() {
        let body = std::mem::take(&mut ir.units[i].body);
        ir.units[i].body = simplify(body, Known::default(), &ir.pools);
    }
}

/// Removes units the entry cannot reach and renumbers calls.
fn drop_unreachable(ir: &mut ProducerIR) {
    let mut live = vec![false; ir.units.len()];
    let mut stack = callees(&ir.entry);
    while let Some(u) = stack.pop() {
        if !std::mem::replace(&mut live[u], true) {
            stack.extend(callees(&ir.units[u].body));
        }
    }
    let mut remap = vec![usize::MAX; ir.units.len()];
    let mut next = 0;
    for (u, &l) in live.iter().enumerate() {
        if l {
            remap[u] = next;
            next += 1;
        }
    }
    let mut renumber = |s: &mut Step| {
        if let Step::Call { unit, .. } = s {
            *unit = remap[*unit];
        }
    };
    visit_mut(&mut ir.entry, &mut renumber);
    let units = std::mem::take(&mut ir.units);
    ir.units = units
        .into_iter()
        .zip(live)
        .filter_map(|(mut u, l)| {
            l.then(|| {
                visit_mut(&mut u.body, &mut renumber);
                u
            })
        })
        .collect();
}

/// Replaces calls for which `pick` returns a body with that body, shifted
/// into the caller's context. Returns whether anything changed.
fn inline_calls(body: &mut Vec<Step>, pick: &impl Fn(usize) -> Option<Vec<Step>>) -> bool {
    let mut changed = false;
    let old = std::mem::take(body);
    for mut step in old {
        match &mut step {
            Step::Call { unit, delta } => {
                if let Some(callee) = pick(*unit) {
                    body.extend(shifted(&callee, *delta));
                    changed = true;
                    continue;
                }
            }
            Step::Choose(arms) => {
                for arm in arms {
                    changed |= inline_calls(arm, pick);
                }
            }
            Step::DepthCheck { under, over, .. } => {
                changed |= inline_calls(under, pick);
                changed |= inline_calls(over, pick);
            }
            _ => {}
        }
        body.push(step);
    }
    changed
}

/// Inlines small non-recursive units that make no choice of their own,
/// folds constant pools and decided depth checks, merges adjacent literals
/// and drops dead units.
pub fn partial_eval(ir: &ProducerIR) -> ProducerIR {
    let mut ir = ir.clone();
    simplify_all(&mut ir);
    loop {
        let recursive = recursive_units(&ir);
        let inlinable: Vec<Option<Vec<Step>>> = ir
            .units
            .iter()
            .zip(&recursive)
            .map(|(u, &rec)| {
                (!rec && choice_free(&u.body) && body_size(&u.body) <= INLINE_SIZE_LIMIT)
                    .then(|| u.body.clone())
            })
            .collect();
        let pick = |u: usize| inlinable[u].clone();
        let mut changed = inline_calls(&mut ir.entry, &pick);
        for i in 0..ir.units.len() {
            changed |= inline_calls(&mut ir.units[i].body, &pick);
        }
        simplify_all(&mut ir);
        drop_unreachable(&mut ir);
        if !changed {
            return ir;
        }
    }
}

/// Supercompiles after partial evaluation.
///
/// Recursive units that choose between rules get one unit per rule, and
/// their dispatch (depth check plus rule choice) is inlined at every call
/// site. Rule units then have the rule units they call driven into them up
/// to `inline_depth - 1` levels, never re-entering a unit already on the
/// driving path. Depth checks are rebased so that the residual program
/// compares against zero. `inline_depth == 0` returns the partially
/// evaluated IR.
pub fn supercompile(ir: &ProducerIR, inline_depth: usize) -> ProducerIR {
    let mut ir = partial_eval(ir);
    if inline_depth == 0 {
        return ir;
    }

    let recursive = recursive_units(&ir);
    let mut dispatch: Vec<Option<Vec<Step>>> = vec![None; ir.units.len()];
    let mut rule_unit = vec![false; ir.units.len()];
    for u in 0..ir.units.len() {
        if !recursive[u] {
            continue;
        }
        let Some(Step::DepthCheck { offset, under, over }) = ir.units[u].body.first().cloned() else {
            continue;
        };
        let ([Step::Choose(arms)], 1) = (&under[..], ir.units[u].body.len()) else {
            continue;
        };
        let mut calls = Vec::with_capacity(arms.len());
        for (i, arm) in arms.iter().enumerate() {
            let name = format!("{}_{i}", ir.units[u].name);
            calls.push(vec![Step::Call { unit: ir.units.len(), delta: 0 }]);
            ir.units.push(Unit { name, body: arm.clone() });
            rule_unit.push(true);
            dispatch.push(None);
        }
        let body = vec![Step::DepthCheck { offset, under: vec![Step::Choose(calls)], over }];
        ir.units[u].body = body.clone();
        dispatch[u] = Some(body);
    }

    let pick = |u: usize| dispatch[u].clone();
    inline_calls(&mut ir.entry, &pick);
    for i in 0..ir.units.len() {
        inline_calls(&mut ir.units[i].body, &pick);
    }

    let bodies: Vec<Vec<Step>> = ir.units.iter().map(|u| u.body.clone()).collect();
    for u in 0..ir.units.len() {
        if rule_unit[u] {
            let mut path = vec![u];
            let mut body = std::mem::take(&mut ir.units[u].body);
            drive(&mut body, &bodies, &rule_unit, &mut path, inline_depth - 1);
            ir.units[u].body = body;
        }
    }

    ir.rebased = true;
    simplify_all(&mut ir);
    drop_unreachable(&mut ir);
    ir
}

fn drive(
    body: &mut Vec<Step>,
    bodies: &[Vec<Step>],
    rule_unit: &[bool],
    path: &mut Vec<usize>,
    levels: usize,
) {
    if levels == 0 {
        return;
    }
    let mut budget = DRIVE_SIZE_LIMIT.saturating_sub(body_size(body));
    let old = std::mem::take(body);
    for mut step in old {
        match &mut step {
            Step::Call { unit, delta }
                if rule_unit[*unit]
                    && !path.contains(unit)
                    && body_size(&bodies[*unit]) <= budget =>
            {
                budget -= body_size(&bodies[*unit]);
                let mut inlined = shifted(&bodies[*unit], *delta);
                path.push(*unit);
                drive(&mut inlined, bodies, rule_unit, path, levels - 1);
                path.pop();
                body.extend(inlined);
                continue;
            }
            Step::Choose(arms) => {
                for arm in arms {
                    drive(arm, bodies, rule_unit, path, levels);
                }
            }
            Step::DepthCheck { under, over, .. } => {
                drive(under, bodies, rule_unit, path, levels);
                drive(over, bodies, rule_unit, path, levels);
            }
            _ => {}
        }
        body.push(step);
    }
}

/// Unit names, for tests and listings.
pub fn unit_names(ir: &ProducerIR) -> HashSet<&str> {
    ir.units.iter().map(|u| u.name.as_str()).collect()
}
