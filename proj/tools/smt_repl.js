#!/usr/bin/env node
// Incremental SMT-LIB2 REPL over stdin/stdout, backed by the z3 WASM build
// from the "z3-solver" npm package. Acts as a drop-in stand-in for `z3 -in`
// on machines without a native solver binary.
//
// State persists across commands (Z3_eval_smtlib2_string keeps the parser
// context alive), so (push)/(pop)/(declare-fun) behave as in a real REPL.

'use strict';

function resolveZ3() {
  const candidates = [
    process.env.Z3_NPM_DIR,
    'z3-solver',
    '/usr/lib/node_modules/z3-solver',
    '/usr/local/lib/node_modules/z3-solver',
  ].filter(Boolean);
  for (const c of candidates) {
    try { return require(c); } catch (e) { /* keep looking */ }
  }
  process.stderr.write('smt_repl: cannot locate the z3-solver npm package\n');
  process.exit(2);
}

// Splits the accumulated input into complete top-level forms. Understands
// double-quoted strings, |quoted symbols| and ;-comments, which is all the
// SMT-LIB2 lexical structure that matters for bracket counting.
function takeCompleteForms(buf) {
  let depth = 0, inStr = false, inSym = false, inComment = false, last = 0;
  let end = -1;
  for (let i = 0; i < buf.length; i++) {
    const ch = buf[i];
    if (inComment) { if (ch === '\n') inComment = false; continue; }
    if (inStr) { if (ch === '"') inStr = false; continue; }
    if (inSym) { if (ch === '|') inSym = false; continue; }
    switch (ch) {
      case ';': inComment = true; break;
      case '"': inStr = true; break;
      case '|': inSym = true; break;
      case '(': depth++; break;
      case ')':
        depth--;
        if (depth === 0) end = i + 1;
        if (depth < 0) { depth = 0; end = i + 1; }
        break;
    }
  }
  if (end < 0) return [null, buf];
  return [buf.slice(0, end), buf.slice(end)];
}

(async () => {
  const { init } = resolveZ3();
  const { Z3 } = await init();
  const ctx = Z3.mk_context(Z3.mk_config());

  let pending = '';
  let busy = Promise.resolve();

  const runChunk = (chunk) => {
    busy = busy.then(async () => {
      if (/\(\s*exit\s*\)/.test(chunk)) {
        const pre = chunk.slice(0, chunk.search(/\(\s*exit\s*\)/));
        if (pre.trim()) {
          const out = await Z3.eval_smtlib2_string(ctx, pre);
          if (out) process.stdout.write(out);
        }
        process.exit(0);
      }
      const out = await Z3.eval_smtlib2_string(ctx, chunk);
      if (out) process.stdout.write(out);
    }).catch((e) => {
      process.stdout.write('(error "' + String(e).replace(/"/g, "'") + '")\n');
    });
  };

  process.stdin.setEncoding('utf8');
  process.stdin.on('data', (d) => {
    pending += d;
    const [forms, rest] = takeCompleteForms(pending);
    pending = rest;
    if (forms) runChunk(forms);
  });
  process.stdin.on('end', () => { busy.then(() => process.exit(0)); });
})();
