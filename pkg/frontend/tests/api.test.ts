import { describe, expect, test } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

describe("ApiClient", () => {
  test("getSession returns null when no session exists", async () => {
    const api = new ApiClient("http://x", async () =>
      jsonResponse(404, { code: "no_session", message: "no session has been started" }),
    );
    expect(await api.getSession()).toBeNull();
  });

  test("non-2xx surfaces as ApiError with code and extras", async () => {
    const api = new ApiClient("http://x", async () =>
      jsonResponse(422, {
        code: "limit_violation",
        message: "proposal violates limits",
        violations: [{ kind: "workspace", index: 4, magnitude: 1.9 }],
      }),
    );
    const err = await api.stageAdjustment({ frame: "base", waypoints: [] }).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(422);
    expect(err.code).toBe("limit_violation");
    expect(err.violations).toEqual([{ kind: "workspace", index: 4, magnitude: 1.9 }]);
  });

  test("violations is empty for errors without them", async () => {
    const api = new ApiClient("http://x", async () =>
      jsonResponse(409, { code: "not_holding", message: "nope" }),
    );
    const err = await api.resume().catch((e) => e);
    expect(err.code).toBe("not_holding");
    expect(err.violations).toEqual([]);
  });

  test("requests carry method, path, and JSON body", async () => {
    const seen: { url: string; init?: RequestInit }[] = [];
    const api = new ApiClient("http://base", async (url, init) => {
      seen.push({ url: String(url), init });
      return jsonResponse(200, { ok: true });
    });
    await api.submitSurvey("overall", 9, "fine");
    expect(seen[0]!.url).toBe("http://base/v1/session/survey");
    expect(seen[0]!.init?.method).toBe("POST");
    expect(JSON.parse(String(seen[0]!.init?.body))).toEqual({
      question_id: "overall",
      value: 9,
      comment: "fine",
    });
  });

  test("non-JSON error bodies still raise a usable error", async () => {
    const api = new ApiClient("http://x", async () => new Response("boom", { status: 500 }));
    const err = await api.stop().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.code).toBe("http_error");
    expect(err.message).toBe("HTTP 500");
  });
});
