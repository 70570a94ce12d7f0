/**
 * Wire protocol shared with the session bridge: JSON text messages with
 * the envelope { type, payload }.  Telemetry flows server -> client once
 * per simulation step; commands and control actions flow back.
 */
export function parseTelemetry(raw) {
    let msg;
    try {
        msg = JSON.parse(raw);
    }
    catch {
        return null;
    }
    const m = msg;
    if (m.type !== "telemetry" || m.payload === undefined) {
        return null;
    }
    return m.payload;
}
export function commandMessage(force, torqueZ, stamp) {
    return { type: "command", payload: { force, torque_z: torqueZ, stamp } };
}
