import { createApp } from './app.js';
import { HttpApiClient } from './api.js';

// Entry point for the served page. The API origin can be overridden with
// ?api=<origin>, and an existing session joined with ?session=<id>.

const params = new URLSearchParams(window.location.search);
const api = new HttpApiClient(params.get('api') ?? '');
const sessionId = params.get('session');

const mount = document.getElementById('app');
if (!mount) throw new Error('missing #app mount point');

const seed = sessionId
  ? api.getSession(sessionId)
  : api.createSession('Once there was a story waiting to be revised.');

seed
  .then((session) => createApp(mount, api, session))
  .catch((err) => {
    mount.textContent = `Could not reach the session service: ${err}`;
  });
