import * as fs from "node:fs";
import { parseArgs } from "node:util";

import { CorpusError, distinctTexts, readCorpus } from "./corpus";
import { DEFAULT_ENCODER, ENCODERS, encodeBatch, textKey } from "./encoder";
import { entryLine, headerLine } from "./format";

const USAGE =
    "usage: node dist/cli.js --corpus corpus.jsonl --out embeddings.ndjson " +
    `[--encoder ${DEFAULT_ENCODER}] [--batch-size 32]`;

function fail(message: string): never {
    process.stderr.write(`${message}\n`);
    process.exit(1);
}

export function main(argv: string[]): void {
    let values: Record<string, string | undefined>;
    try {
        ({ values } = parseArgs({
            args: argv,
            options: {
                corpus: { type: "string" },
                out: { type: "string" },
                encoder: { type: "string", default: DEFAULT_ENCODER },
                "batch-size": { type: "string", default: "32" },
            },
        }));
    } catch (err) {
        fail(`${(err as Error).message}\n${USAGE}`);
    }
    if (!values.corpus || !values.out) {
        fail(`--corpus and --out are required\n${USAGE}`);
    }
    const encoderName = values.encoder as string;
    const info = ENCODERS[encoderName];
    if (!info) {
        fail(
            `encoder ${encoderName} is not available locally ` +
                `(have: ${Object.keys(ENCODERS).join(", ")})`
        );
    }
    const batchSize = Number(values["batch-size"]);
    if (!Number.isInteger(batchSize) || batchSize < 1) {
        fail(`--batch-size must be a positive integer, got ${values["batch-size"]}`);
    }

    let texts: string[];
    try {
        texts = distinctTexts(readCorpus(values.corpus));
    } catch (err) {
        if (err instanceof CorpusError) fail(`corpus: ${err.message}`);
        throw err;
    }

    const vectors = encodeBatch(texts, info.dim, batchSize);
    const lines = [headerLine(info.dim, encoderName, info.pooling)];
    texts.forEach((text, i) => {
        lines.push(entryLine(textKey(text), vectors[i]));
    });
    fs.writeFileSync(values.out, lines.join("\n") + "\n");
    process.stderr.write(
        `exported ${texts.length} embeddings (dim ${info.dim}) to ${values.out}\n`
    );
}

if (require.main === module) {
    main(process.argv.slice(2));
}
