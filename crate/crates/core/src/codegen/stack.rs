//! The stacking optimization for the document target: maximal runs of
//! consecutive updateMany statements on the same collection merge into one
//! bulkWrite. Pipeline statements and markers never stack and break runs.

use super::{GeneratedScript, Statement, StatementKind, Target, UpdateParts};

pub fn stack_optimize(script: &GeneratedScript) -> GeneratedScript {
    if script.target != Target::Document {
        return script.clone();
    }

    let mut statements: Vec<Statement> = Vec::new();
    let mut run: Vec<Statement> = Vec::new();

    let flush = |run: &mut Vec<Statement>, statements: &mut Vec<Statement>| {
        match run.len() {
            0 => {}
            1 => statements.push(run.pop().unwrap()),
            _ => {
                statements.push(bulk_write(run));
                run.clear();
            }
        }
    };

    for statement in &script.statements {
        let stackable = statement.kind == StatementKind::Command && statement.stack.is_some();
        if !stackable {
            flush(&mut run, &mut statements);
            statements.push(statement.clone());
            continue;
        }
        let same_collection = run.last().is_some_and(|prev| {
            let a = prev.stack.as_ref().unwrap();
            let b = statement.stack.as_ref().unwrap();
            a.database == b.database && a.collection == b.collection
        });
        if !run.is_empty() && !same_collection {
            flush(&mut run, &mut statements);
        }
        run.push(statement.clone());
    }
    flush(&mut run, &mut statements);

    GeneratedScript {
        target: Target::Document,
        statements,
    }
}

/// Renders a run of updates as one bulkWrite, entry order preserved.
fn bulk_write(run: &[Statement]) -> Statement {
    let parts: Vec<&UpdateParts> = run.iter().map(|s| s.stack.as_ref().unwrap()).collect();
    let head = parts[0];
    let mut text = format!("{}.{}.bulkWrite([\n", head.database, head.collection);
    for (i, p) in parts.iter().enumerate() {
        text.push_str(&format!(
            " {}\n {{updateMany: {{\n    filter: {},\n    update: {}}}}}",
            p.comment, p.filter, p.update
        ));
        if i + 1 < parts.len() {
            text.push(',');
        }
        text.push('\n');
    }
    text.push_str("])");

    let mut source_ops = Vec::new();
    for s in run {
        for op in &s.source_ops {
            if !source_ops.contains(op) {
                source_ops.push(*op);
            }
        }
    }
    Statement {
        text,
        source_ops,
        kind: StatementKind::Command,
        stack: None,
    }
}
