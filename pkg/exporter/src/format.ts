export const FORMAT_VERSION = 1;

/** Serialize one float at 8 significant digits, shortest form. */
export function formatFloat(x: number): string {
    if (!Number.isFinite(x)) {
        throw new Error(`embedding components must be finite, got ${x}`);
    }
    return JSON.stringify(Number(x.toPrecision(8)));
}

export function headerLine(
    dim: number,
    encoderName: string,
    pooling: string
): string {
    return JSON.stringify({
        format_version: FORMAT_VERSION,
        dim,
        encoder_name: encoderName,
        pooling,
    });
}

export function entryLine(key: string, vector: Float64Array): string {
    const parts = Array.from(vector, formatFloat);
    return `{"key":${JSON.stringify(key)},"vector":[${parts.join(",")}]}`;
}
