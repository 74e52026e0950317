import { describe, expect, it } from 'vitest';

import { ApiError, GameClient, parseNdjson } from '../src/api.js';

interface Call {
  url: string;
  init?: RequestInit;
}

function fakeFetch(
  responder: (url: string, init?: RequestInit) => Response,
): { calls: Call[]; fetch: (url: string, init?: RequestInit) => Promise<Response> } {
  const calls: Call[] = [];
  return {
    calls,
    fetch: (url, init) => {
      calls.push({ url, init });
      return Promise.resolve(responder(url, init));
    },
  };
}

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'content-type': 'application/json' },
  });
}

describe('GameClient', () => {
  it('hits the catalog endpoint with the base url', async () => {
    const { calls, fetch } = fakeFetch(() =>
      jsonResponse({ start_tile: 'D', tiles: {} }),
    );
    const client = new GameClient('http://h:1', fetch);
    const cat = await client.catalog();
    expect(cat.start_tile).toBe('D');
    expect(calls[0].url).toBe('http://h:1/catalog');
  });

  it('posts session options as JSON', async () => {
    const { calls, fetch } = fakeFetch(() =>
      jsonResponse({ session_id: 's1', seed: 7, board_size: 9, seats: [], state: {} }),
    );
    const client = new GameClient('', fetch);
    await client.createSession({ seed: 7, seats: ['human', 'ai'] });
    expect(calls[0].url).toBe('/sessions');
    expect(calls[0].init?.method).toBe('POST');
    expect(JSON.parse(String(calls[0].init?.body))).toEqual({
      seed: 7,
      seats: ['human', 'ai'],
    });
  });

  it('raises ApiError with the mask from a 409 rejection', async () => {
    const { fetch } = fakeFetch(() =>
      jsonResponse({ detail: { error: 'not your turn', mask: [3, 9] } }, 409),
    );
    const client = new GameClient('', fetch);
    const err = await client.act('s1', 0, 3).catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.message).toBe('not your turn');
    expect(err.mask).toEqual([3, 9]);
  });

  it('keeps the status message when the error body is not JSON', async () => {
    const { fetch } = fakeFetch(() => new Response('boom', { status: 500 }));
    const client = new GameClient('', fetch);
    const err = await client.state('s1').catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.message).toBe('HTTP 500');
    expect(err.mask).toBeNull();
  });

  it('serializes heatmap half-life as null when omitted', async () => {
    const { calls, fetch } = fakeFetch(() =>
      jsonResponse({ board_size: 9, grid: [], off_board_ms: 0 }),
    );
    const client = new GameClient('', fetch);
    await client.heatmap('s1', 't_ms,x,y,valid\n');
    const body = JSON.parse(String(calls[0].init?.body));
    expect(body.half_life_ms).toBeNull();
  });

  it('parses the event stream as NDJSON with a since filter', async () => {
    const lines =
      '{"seq":2,"turn":1,"kind":"draw","payload":{}}\n' +
      '{"seq":3,"turn":1,"kind":"place_tile","payload":{"tile":"D"}}\n';
    const { calls, fetch } = fakeFetch(() => new Response(lines, { status: 200 }));
    const client = new GameClient('', fetch);
    const events = await client.events('s1', 2);
    expect(calls[0].url).toBe('/sessions/s1/events?since=2');
    expect(events.map((e) => e.seq)).toEqual([2, 3]);
    expect(events[1].payload.tile).toBe('D');
  });
});

describe('parseNdjson', () => {
  it('skips blank lines', () => {
    expect(parseNdjson('\n{"seq":0,"turn":0,"kind":"session","payload":{}}\n\n')).toHaveLength(1);
  });

  it('returns an empty list for an empty body', () => {
    expect(parseNdjson('')).toEqual([]);
  });
});
