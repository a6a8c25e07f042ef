import * as fs from "node:fs";

export interface CorpusInstance {
    id: string;
    candidates: string[];
    references: string[];
}

export class CorpusError extends Error {}

function stringList(value: unknown): value is string[] {
    return Array.isArray(value) && value.every((x) => typeof x === "string");
}

/** Read a JSONL corpus: one {id, candidates, references} object per line. */
export function readCorpus(path: string): CorpusInstance[] {
    const instances: CorpusInstance[] = [];
    const seen = new Set<string>();
    const lines = fs.readFileSync(path, "utf-8").split("\n");
    lines.forEach((line, index) => {
        if (!line.trim()) return;
        const lineno = index + 1;
        let record: unknown;
        try {
            record = JSON.parse(line);
        } catch {
            throw new CorpusError(`line ${lineno}: invalid json`);
        }
        if (typeof record !== "object" || record === null || Array.isArray(record)) {
            throw new CorpusError(`line ${lineno}: each line must be a json object`);
        }
        const rec = record as Record<string, unknown>;
        if (typeof rec.id !== "string" || !rec.id) {
            throw new CorpusError(`line ${lineno}: id must be a non-empty string`);
        }
        if (seen.has(rec.id)) {
            throw new CorpusError(`line ${lineno}: duplicate instance id ${rec.id}`);
        }
        seen.add(rec.id);
        if (!stringList(rec.candidates) || rec.candidates.length === 0) {
            throw new CorpusError(
                `line ${lineno}: candidates must be a non-empty list of strings`
            );
        }
        if (!stringList(rec.references) || rec.references.length === 0) {
            throw new CorpusError(
                `line ${lineno}: references must be a non-empty list of strings`
            );
        }
        instances.push({
            id: rec.id,
            candidates: rec.candidates,
            references: rec.references,
        });
    });
    if (instances.length === 0) {
        throw new CorpusError("corpus has no instances");
    }
    return instances;
}

/** Every distinct raw text, candidates before references, first seen first. */
export function distinctTexts(instances: CorpusInstance[]): string[] {
    const out: string[] = [];
    const seen = new Set<string>();
    for (const inst of instances) {
        for (const text of [...inst.candidates, ...inst.references]) {
            if (!seen.has(text)) {
                seen.add(text);
                out.push(text);
            }
        }
    }
    return out;
}
