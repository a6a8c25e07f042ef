import { createHash } from "node:crypto";

export interface EncoderInfo {
    dim: number;
    pooling: string;
}

/**
 * Available encoders.  hash-ngram-v1 is a fully offline feature hasher:
 * no downloads, byte-for-byte reproducible anywhere.  Word and character
 * n-gram features are hashed into signed buckets and the sum is
 * L2-normalized, so texts sharing surface vocabulary land near each other
 * while the vectors stay deterministic functions of the input string.
 */
export const ENCODERS: Record<string, EncoderInfo> = {
    "hash-ngram-v1": { dim: 384, pooling: "hashed-ngram-sum" },
};

export const DEFAULT_ENCODER = "hash-ngram-v1";

/** Lookup key for a text: lowercase hex SHA-256 of its UTF-8 bytes. */
export function textKey(text: string): string {
    return createHash("sha256").update(text, "utf-8").digest("hex");
}

function features(text: string): string[] {
    const words = text.toLowerCase().match(/[a-z0-9]+/g) ?? [];
    const out: string[] = [];
    for (const word of words) {
        out.push(`w:${word}`);
        const padded = `#${word}#`;
        for (let i = 0; i + 3 <= padded.length; i++) {
            out.push(`c:${padded.slice(i, i + 3)}`);
        }
    }
    for (let i = 0; i + 1 < words.length; i++) {
        out.push(`b:${words[i]}_${words[i + 1]}`);
    }
    return out;
}

/** Deterministic unit-norm embedding of one text. */
export function encode(text: string, dim: number): Float64Array {
    const vec = new Float64Array(dim);
    for (const feature of features(text)) {
        const digest = createHash("sha256").update(feature, "utf-8").digest();
        const bucket = digest.readUInt32BE(0) % dim;
        vec[bucket] += digest[4] & 1 ? 1.0 : -1.0;
    }
    let norm = Math.sqrt(vec.reduce((acc, x) => acc + x * x, 0));
    if (norm === 0) {
        // No alphanumeric content at all; fall back to a fixed basis vector.
        vec[0] = 1.0;
        norm = 1.0;
    }
    for (let i = 0; i < dim; i++) {
        vec[i] /= norm;
    }
    return vec;
}

/** Encode texts in fixed-size batches (memory bound, not a speed knob). */
export function encodeBatch(
    texts: string[],
    dim: number,
    batchSize: number
): Float64Array[] {
    const out: Float64Array[] = [];
    for (let start = 0; start < texts.length; start += batchSize) {
        for (const text of texts.slice(start, start + batchSize)) {
            out.push(encode(text, dim));
        }
    }
    return out;
}
